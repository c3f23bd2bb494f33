"""CSV ingestion for price and return files."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .core import log_returns
from .exceptions import InputFileNotFound, ParseError

__all__ = ["LoadedSeries", "read_series_csv", "RETURN_COLUMNS", "PRICE_COLUMNS"]

# first match wins; "observed" reads panels written by the simulator
RETURN_COLUMNS = ("return", "returns", "observed")
PRICE_COLUMNS = ("price", "prices", "close")


@dataclass(frozen=True)
class LoadedSeries:
    path: str
    kind: str
    column: str
    returns: np.ndarray
    dates: tuple | None = None


def _pick_column(header, kind, column):
    names = [h.strip() for h in header]
    lower = [h.lower() for h in names]
    if column is not None:
        if column not in names:
            raise ParseError(f"no column named {column!r}; found {names}", row=1)
        return names.index(column)
    for cand in RETURN_COLUMNS if kind == "return" else PRICE_COLUMNS:
        if cand in lower:
            return lower.index(cand)
    wanted = "/".join(RETURN_COLUMNS if kind == "return" else PRICE_COLUMNS)
    raise ParseError(f"no {wanted} column; pass --column to choose one of {names}", row=1)


def read_series_csv(path, kind: str = "return", column: str | None = None) -> LoadedSeries:
    """Read one numeric column of a headed CSV file.

    With ``kind='price'`` the column holds prices and log-returns are
    returned (the first row is dropped).  A ``date`` column, when
    present, is carried along but never used.  Rows are numbered from 1
    with the header as row 1, matching what a spreadsheet shows.
    """
    if kind not in ("return", "price"):
        raise ValueError(f"kind must be 'return' or 'price', got {kind!r}")
    try:
        fh = open(path, newline="")
    except FileNotFoundError:
        raise InputFileNotFound(f"input file not found: {path}") from None
    except IsADirectoryError:
        raise InputFileNotFound(f"input path is a directory: {path}") from None
    with fh:
        rows = [r for r in csv.reader(line for line in fh if not line.startswith("#"))]
    if not rows:
        raise ParseError(f"{path} is empty", row=1)
    header = rows[0]
    idx = _pick_column(header, kind, column)
    name = header[idx].strip()
    lower = [h.strip().lower() for h in header]
    date_idx = lower.index("date") if "date" in lower else None
    values = []
    dates = []
    for k, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if idx >= len(row):
            raise ParseError("row is too short", row=k, column=name)
        cell = row[idx].strip()
        try:
            v = float(cell)
        except ValueError:
            raise ParseError(f"cannot parse {cell!r} as a number", row=k, column=name) from None
        if not np.isfinite(v):
            raise ParseError(f"non-finite value {cell!r}", row=k, column=name)
        if kind == "price" and v <= 0:
            raise ParseError(f"prices must be positive, got {cell!r}", row=k, column=name)
        values.append(v)
        if date_idx is not None:
            dates.append(row[date_idx].strip() if date_idx < len(row) else "")
    x = np.array(values, dtype=float)
    if kind == "price":
        x = log_returns(x)
        dates = dates[1:]
    return LoadedSeries(
        path=str(path),
        kind=kind,
        column=name,
        returns=x,
        dates=tuple(dates) if date_idx is not None else None,
    )
