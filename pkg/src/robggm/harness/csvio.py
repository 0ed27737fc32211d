"""CSV and edge-list reading/writing."""

from __future__ import annotations

import csv
import math

import numpy as np

from .._base import DataMatrix
from ..graphest import EdgeSet

__all__ = ["CsvParseError", "ingest_csv", "write_data_csv", "write_edges", "read_edges", "fmt"]


class CsvParseError(ValueError):
    def __init__(self, message, line):
        super().__init__(f"line {line}: {message}")
        self.line = line


def fmt(value) -> str:
    """17 significant digits, so doubles round-trip exactly."""
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    value = float(value)
    if math.isnan(value):
        return "nan"
    return f"{value:.17g}"


def ingest_csv(path, has_header: bool = False) -> DataMatrix:
    """Read a rectangular numeric CSV (rows are observations).

    Raises
    ------
    CsvParseError
        On ragged rows or non-numeric cells, with the 1-based line number.
    """
    names = None
    rows = []
    width = None
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if has_header and names is None:
                names = [c.strip() for c in row]
                width = len(names)
                continue
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise CsvParseError(f"expected {width} fields, found {len(row)}", lineno)
            try:
                rows.append([float(c) for c in row])
            except ValueError:
                bad = next(c for c in row if not _is_float(c))
                raise CsvParseError(f"non-numeric value {bad.strip()!r}", lineno) from None
            if not all(math.isfinite(v) for v in rows[-1]):
                raise CsvParseError("non-finite value", lineno)
    if not rows:
        raise CsvParseError("no data rows", 1)
    return DataMatrix(np.array(rows), names=names)


def _is_float(text):
    try:
        float(text)
    except ValueError:
        return False
    return True


def write_data_csv(path, data: DataMatrix) -> None:
    names = data.names or tuple(f"X{j + 1}" for j in range(data.p))
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(names) + "\n")
        for row in data.values:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def write_edges(path, edges, p: int | None = None) -> None:
    """One ``i j`` pair per line, 1-based, after a ``# p=<p>`` header."""
    p = getattr(edges, "p", p)
    pairs = sorted(getattr(edges, "pairs", edges))
    with open(path, "w", newline="\n") as fh:
        fh.write(f"# p={p}\n")
        for i, j in pairs:
            fh.write(f"{i + 1} {j + 1}\n")


def read_edges(path) -> EdgeSet:
    p = None
    pairs = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                if line[1:].strip().startswith("p="):
                    p = int(line[1:].strip()[2:])
                continue
            fields = line.split()
            if len(fields) != 2:
                raise CsvParseError("edge lines need two indices", lineno)
            pairs.append((int(fields[0]) - 1, int(fields[1]) - 1))
    if p is None:
        p = max((max(e) for e in pairs), default=-1) + 1
    return EdgeSet(p, frozenset(pairs))
