"""Error framework tests."""

import pytest

from smae.errors import (
    ConfigError,
    DataError,
    ErrorDescriptor,
    ErrorGeneratorMixin,
    NumericError,
    ShapeError,
    UsageError,
)
from smae.graph.corpus import CorpusReader


class _Widget(ErrorGeneratorMixin):
    ERR_SIZE = 1
    _ERRORS = {
        ERR_SIZE: ErrorDescriptor(
            ERR_SIZE, "Size", "size {size} too big", DataError
        )
    }


def test_exit_statuses():
    """Each error family maps to its exit status."""
    assert UsageError("x").exit_status == 1
    assert ConfigError("x").exit_status == 1
    assert DataError("x").exit_status == 2
    assert ShapeError("x").exit_status == 2
    assert NumericError("x").exit_status == 3


def test_error_from_code():
    """Templated messages carry their code and embedded exception."""
    cause = ValueError("bad")
    err = _Widget.get_error_from_code(
        _Widget.ERR_SIZE, size=9, _exception=cause, _msg_prefix="widget: "
    )
    assert isinstance(err, DataError)
    assert err.code == 1
    assert err.msg == "widget: size 9 too big"
    assert err.exception is cause
    assert str(err) == "(#1) widget: size 9 too big"
    with pytest.raises(KeyError):
        _Widget.get_error_from_code(2)


def test_explicit_table():
    """A table passed in overrides the class table."""
    descriptor = ErrorDescriptor(5, "Thing", "thing {name}", ConfigError)
    err = _Widget.get_error_from_code(5, {5: descriptor}, name="a")
    assert isinstance(err, ConfigError)
    assert err.msg == "thing a"
    with pytest.raises(TypeError):
        ErrorDescriptor(6, "Bad", "bad", KeyError)


def test_module_tables_unique():
    """Codes of a module table are registered under their own keys."""
    for code, descriptor in CorpusReader._ERRORS.items():
        assert descriptor.code == code
        assert descriptor.ex_class is DataError
