"""Byte-stable CSV output: fixed columns, 9 significant digits, LF endings."""
import csv
import io
import math
from contextlib import contextmanager


def fmt(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        out = f"{value:.9g}"
        return "0" if out == "-0" else out
    return str(value)


@contextmanager
def _open(dest):
    if isinstance(dest, io.TextIOBase) or hasattr(dest, "write"):
        yield dest
    else:
        with open(dest, "w", newline="", encoding="utf-8") as fh:
            yield fh


def write_rows(dest, header, rows):
    with _open(dest) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
