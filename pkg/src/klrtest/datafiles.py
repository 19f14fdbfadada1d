"""Reading and writing delimiter-separated numeric matrices.

Rows are observations, columns are coordinates.  The delimiter is sniffed
from the first data line (comma, semicolon, tab, else whitespace) and an
optional header row is detected by failing to parse as numbers.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import InputError


def _sniff_delimiter(line: str) -> str | None:
    for cand in (",", ";", "\t"):
        if cand in line:
            return cand
    return None


def _parse_row(line: str, delimiter: str | None) -> list[str]:
    tokens = line.split(delimiter) if delimiter else line.split()
    return [t.strip() for t in tokens if t.strip()]


def load_matrix(path) -> np.ndarray:
    """Load an n x d numeric matrix from a delimited text file."""
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise InputError(f"cannot read {p}: {exc}") from exc
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise InputError(f"{p}: file is empty")
    delimiter = _sniff_delimiter(lines[0])
    rows = [_parse_row(ln, delimiter) for ln in lines]

    def as_floats(tokens: list[str]) -> list[float] | None:
        try:
            return [float(t) for t in tokens]
        except ValueError:
            return None

    start = 0
    if as_floats(rows[0]) is None:
        start = 1  # header row
        if len(rows) == 1:
            raise InputError(f"{p}: no data rows after header")
    width = len(rows[start])
    data = []
    for i, tokens in enumerate(rows[start:], start=start + 1):
        values = as_floats(tokens)
        if values is None:
            raise InputError(f"{p}: line {i} contains non-numeric data")
        if len(values) != width:
            raise InputError(f"{p}: line {i} has {len(values)} columns, expected {width}")
        data.append(values)
    return np.asarray(data, dtype=float)


def save_matrix(path, matrix, delimiter: str = ",") -> None:
    """Write a numeric matrix as delimited text, one observation per row."""
    arr = np.asarray(matrix, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    np.savetxt(path, arr, delimiter=delimiter, fmt="%.17g")
