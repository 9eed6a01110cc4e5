"""Error generation."""

from typing import Union, Optional, Type, Dict

ExceptionCodeType = Union[str, int]


class ErrorCodeException(Exception):
    """Exception with error code."""

    def __init__(
        self,
        message: str,
        code: Optional[ExceptionCodeType] = None,
        exception: Optional[Exception] = None,
    ):
        """Initialize.

        :param message: The error message
        :param code: The error code
        :param exception: An embedded exception associated to the error
        """
        super().__init__(message)
        self.msg = message
        self.code = code
        self.exception = exception

    def __repr__(self):
        """Get representation."""
        if self.code is not None:
            err_code = "(#{})".format(self.code)
        else:
            err_code = ""
        return "{} {}".format(err_code, self.msg)

    def __str__(self):
        """Get string."""
        return self.__repr__()


class SmaeError(ErrorCodeException):
    """Base class of all toolkit errors.

    ``exit_status`` is the process exit code the command line maps this
    error to.
    """

    exit_status = 1


class UsageError(SmaeError):
    """Bad command line usage."""

    exit_status = 1


class ConfigError(SmaeError):
    """Invalid configuration."""

    exit_status = 1


class DataError(SmaeError):
    """Malformed or inconsistent input data."""

    exit_status = 2


class NumericError(SmaeError):
    """Non-finite values, divergence or failed numerical checks."""

    exit_status = 3


class ShapeError(DataError):
    """Operands with incompatible shapes."""


class ErrorDescriptor:
    """Error descriptor."""

    def __init__(
        self,
        error_code: ExceptionCodeType,
        brief: str,
        fmt_str: str,
        exception_class: Type,
    ):
        """Initialize.

        :param error_code: The error code
        :param brief: A brief description of the error
        :param fmt_str: A complete description of the error, including format \
        string pieces for templating the error message
        :param exception_class: Class of the exception for the error
        """
        if not issubclass(exception_class, ErrorCodeException):
            raise TypeError(
                'argument "exception_class" must be a subclass '
                "of ErrorCodeException"
            )

        self.code = error_code
        self.brief = brief
        self.fmt_str = fmt_str
        self.ex_class = exception_class

    def get_message(self, **msg_kwargs: str) -> str:
        """Get error message.

        :param msg_kwargs: Values for formatting of the error message
        :return: Formatted error message
        """
        return self.fmt_str.format(**msg_kwargs)



class ErrorGeneratorMixin:
    """Error generator Mixin.

    Classes using this mixin declare a ``_ERRORS`` table mapping error codes
    to :class:`ErrorDescriptor` objects.
    """

    _ERRORS: Dict[ExceptionCodeType, ErrorDescriptor] = {}

    @classmethod
    def get_error_from_code(
        cls,
        code: ExceptionCodeType,
        errors: Optional[Dict[ExceptionCodeType, ErrorDescriptor]] = None,
        **msg_kwargs: str
    ) -> ErrorCodeException:
        """Get error from code.

        :param code: Error code
        :param errors: Dictionary containing possible errors, defaults to \
        the class table
        :param msg_kwargs: Values for error message templating
        :return: Exception ready to be raised
        """
        if errors is None:
            errors = cls._ERRORS
        if code not in errors:
            raise KeyError("unknown error code: {}".format(code))

        suffix = ""
        prefix = ""
        exception = msg_kwargs.pop("_exception", None)
        if "_msg_suffix" in msg_kwargs:
            suffix = msg_kwargs.pop("_msg_suffix")
        if "_msg_prefix" in msg_kwargs:
            prefix = msg_kwargs.pop("_msg_prefix")

        err = errors[code]
        msg = "{prefix}{msg}{suffix}".format(
            prefix=prefix,
            msg=err.get_message(**msg_kwargs),
            suffix=suffix,
        )
        return err.ex_class(msg, code, exception)
