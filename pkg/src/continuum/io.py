"""CSV ingestion and result emission.

CSV files hold one observation per row with a header row naming the
columns.  They are transposed on load, so a :class:`Dataset` carries the
usual ``p x n`` layout.
"""

from __future__ import annotations

import csv
import io
import math
import sys
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Union

import numpy as np

from ._json import dumps
from .errors import CsvParseError
from .scatter import Dataset

PathLike = Union[str, Path]


def _parse_float(cell: str, line: int, column: str) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise CsvParseError(f"line {line}, column {column!r}: not a number: {cell!r}") from None
    if not math.isfinite(value):
        raise CsvParseError(f"line {line}, column {column!r}: non-finite value {cell!r}")
    return value


def parse_csv(text: str, label_column: Optional[str] = None) -> Dataset:
    """Parse CSV text into a :class:`Dataset`; see :func:`load_csv`."""
    rows = [(i, r) for i, r in enumerate(csv.reader(io.StringIO(text)), start=1)
            if r and any(c.strip() for c in r)]
    if not rows:
        raise CsvParseError("empty CSV")
    _, header = rows[0]
    header = [h.strip() for h in header]
    if label_column is not None and label_column not in header:
        raise CsvParseError(f"line 1: label column {label_column!r} not found in header")
    label_idx = header.index(label_column) if label_column is not None else None
    features = [j for j in range(len(header)) if j != label_idx]
    if not features:
        raise CsvParseError("line 1: no feature columns")

    values: List[List[float]] = []
    labels: List[str] = []
    for line, row in rows[1:]:
        if len(row) != len(header):
            raise CsvParseError(f"line {line}: expected {len(header)} fields, got {len(row)}")
        values.append([_parse_float(row[j].strip(), line, header[j]) for j in features])
        if label_idx is not None:
            labels.append(row[label_idx].strip())
    if not values:
        raise CsvParseError("CSV has a header but no data rows")
    X = np.asarray(values, dtype=float).T
    return Dataset(X, np.asarray(labels) if label_idx is not None else None)


def load_csv(path: PathLike, label_column: Optional[str] = None) -> Dataset:
    """Read a rows-as-observations CSV with a header row.

    Blank lines are skipped.  Numbers are parsed with ``float`` (decimal
    point, locale independent).  ``label_column`` names the column holding
    class labels, which are kept as strings.

    Raises
    ------
    CsvParseError
        for ragged rows, non-numeric or non-finite feature cells, or a missing
        label column; the message names the line and column.
    """
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CsvParseError(f"cannot read {path}: {exc}") from exc
    return parse_csv(text, label_column)


def to_tsv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    """Tab-separated text; floats use ``repr`` so they round-trip exactly."""
    def cell(v):
        if isinstance(v, (float, np.floating)):
            v = float(v)
            if math.isnan(v):
                return "nan"
            if math.isinf(v):
                return "inf" if v > 0 else "-inf"
            return repr(v)
        if isinstance(v, np.generic):
            return str(v.item())
        return str(v)

    lines = ["\t".join(header)]
    lines += ["\t".join(cell(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def to_json(obj) -> str:
    """Deterministic JSON with non-finite floats written as strings."""
    return dumps(obj, indent=2) + "\n"


def write_output(text: str, path: Optional[PathLike]) -> None:
    """Write to ``path``, or to standard output when ``path`` is None or ``-``."""
    if path is None or str(path) == "-":
        sys.stdout.write(text)
        return
    Path(path).write_text(text)
