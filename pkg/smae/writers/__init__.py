"""Text emission of data products."""

import json
import sys
from typing import Any, Dict

from smae.errors import DataError


def _json_line(record: Dict[str, Any]) -> str:
    return json.dumps(record, separators=(",", ":"))


class RecordWriter:
    """Renders data products as text.

    The method ``gen_Foo`` renders objects of class ``Foo``; classes without
    a method fall back to their base classes, then to a ``to_dict``
    method rendered as indented JSON.
    """

    def dump_element(self, element: Any, **kwargs: Any) -> str:
        """Get the text representation of an element.

        :param element: Element to be dumped
        :param kwargs: Additional flags
        :return: Text, without trailing newline
        """
        cls_name = element.__class__.__name__
        gen_method = getattr(self, "gen_{}".format(cls_name), None)
        if gen_method is not None:
            return gen_method(element, **kwargs)
        for base in element.__class__.__bases__:
            gen_method = getattr(self, "gen_{}".format(base.__name__), None)
            if gen_method is not None:
                return gen_method(element, **kwargs)
        if hasattr(element, "to_dict"):
            return json.dumps(element.to_dict(), indent=2, sort_keys=True)
        raise TypeError("cannot render object type {}".format(cls_name))

    def gen_list(self, element: list, **kwargs: Any) -> str:
        """Render each item on its own line."""
        return "\n".join(self.dump_element(item, **kwargs) for item in element)

    def gen_tuple(self, element: tuple, **kwargs: Any) -> str:
        """Render a ranked (index, similarity) pair."""
        index, similarity = element
        return _json_line({"i": int(index), "similarity": float(similarity)})

    def gen_ScoreVector(self, element, index: int = 0, **kwargs: Any) -> str:
        """Render one graph's scores."""
        record = {
            "i": index,
            "metric": element.metric,
            "scores": element.values.tolist(),
        }
        if not element.converged:
            record["converged"] = False
        return _json_line(record)

    def gen_MaskPlan(self, element, index: int = 0, **kwargs: Any) -> str:
        """Render one graph's masked set."""
        return _json_line(
            {
                "i": index,
                "epoch": element.epoch,
                "k": element.k_used,
                "informative": list(element.informative_set),
                "masked": list(element.masked),
            }
        )

    def gen_EmbeddingMatrix(self, element, **kwargs: Any) -> str:
        """Render one record per graph."""
        return "\n".join(_json_line(r) for r in element.records())

    def gen_SweepResult(self, element, **kwargs: Any) -> str:
        """Render sweep rows as CSV."""
        lines = ["{},mean_acc,std".format(element.axis)]
        for value, report in element.rows:
            lines.append(
                "{},{:.6f},{:.6f}".format(
                    value, report.mean_accuracy, report.std_accuracy
                )
            )
        return "\n".join(lines)


def write_output(path: str, text: str):
    """Write text to a file, or to standard output when path is ``-``.

    :param path: Output path
    :param text: Contents; a trailing newline is added
    """
    if text and not text.endswith("\n"):
        text += "\n"
    if path == "-":
        sys.stdout.write(text)
        return
    try:
        with open(path, "w") as out_file:
            out_file.write(text)
    except OSError as ex:
        raise DataError(
            "cannot write {}: {}".format(path, ex), exception=ex
        )
