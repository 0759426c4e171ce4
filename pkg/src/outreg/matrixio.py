"""Dense matrices as CSV: comma-separated, one matrix row per line, no header.

Values are written with 17 significant digits, which is enough for every float64 to read back bit-identical.
"""

from __future__ import annotations

import csv
import io
import math
import os

import numpy as np

from . import _typing_compat as _t
from ._numerics import as_matrix, as_vector
from .errors import MatrixParseError


__all__ = ("FLOAT_FORMAT", "parse_matrix", "read_matrix", "read_vector", "write_matrix", "format_matrix")


#: The printf-style format for every value written.
FLOAT_FORMAT = "%.17g"


def parse_matrix(text: str, filename: str = "<string>") -> _t.FloatArray:
    """Parse CSV text into a matrix.

    Trailing blank lines are ignored; any other blank line is an error.

    Raises
    ------
    MatrixParseError
        If the text holds no rows, a cell is not a finite number, or the rows differ in length. The error points at the
        offending cell.
    """

    lines = text.splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        msg = "The file holds no matrix rows."
        raise MatrixParseError(msg, (filename, "", 1, 0, 1))

    rows: list[list[float]] = []
    width: _t.Optional[int] = None
    for lineno, (line, cells) in enumerate(zip(lines, csv.reader(lines)), start=1):
        if not line.strip():
            msg = "Blank line inside the matrix."
            raise MatrixParseError(msg, (filename, line, lineno, 0, 1))

        row: list[float] = []
        offset = 0
        for column, cell in enumerate(cells, start=1):
            end_offset = offset + len(cell)
            try:
                value = float(cell)
            except ValueError:
                msg = f"Column {column} is not a number: {cell.strip()!r}."
                raise MatrixParseError(msg, (filename, line, lineno, offset, end_offset)) from None
            if not math.isfinite(value):
                msg = f"Column {column} is not finite: {cell.strip()!r}."
                raise MatrixParseError(msg, (filename, line, lineno, offset, end_offset))
            row.append(value)
            offset = end_offset + 1

        if width is None:
            width = len(row)
        elif len(row) != width:
            msg = f"Row {lineno} has {len(row)} columns; the first row has {width}."
            raise MatrixParseError(msg, (filename, line, lineno, 0, len(line)))
        rows.append(row)

    return np.array(rows, dtype=np.float64)


def read_matrix(path: _t.Union[str, os.PathLike[str]]) -> _t.FloatArray:
    """Read a matrix from a CSV file. See `parse_matrix`."""

    with open(path, encoding="utf-8", newline="") as fp:
        return parse_matrix(fp.read(), os.fspath(path))


def read_vector(path: _t.Union[str, os.PathLike[str]]) -> _t.FloatArray:
    """Read a vector stored as a single CSV row or a single column."""

    return as_vector(read_matrix(path), os.fspath(path))


def _as_rows(M: _t.ArrayLike) -> _t.FloatArray:
    arr = np.asarray(M, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    return as_matrix(arr, "matrix")


def format_matrix(M: _t.ArrayLike) -> str:
    """Render a matrix as CSV text. A vector becomes a single row."""

    buffer = io.StringIO()
    np.savetxt(buffer, _as_rows(M), fmt=FLOAT_FORMAT, delimiter=",")
    return buffer.getvalue()


def write_matrix(path: _t.Union[str, os.PathLike[str]], M: _t.ArrayLike) -> None:
    """Write a matrix (or a vector, as one row) to a CSV file."""

    with open(path, "w", encoding="utf-8", newline="") as fp:
        np.savetxt(fp, _as_rows(M), fmt=FLOAT_FORMAT, delimiter=",")
