"""
CSV ingestion for the command-line front-end.

Accepts a single-column file or a multi-column file with a header row. Blank lines
are skipped; any other cell that does not parse as a finite number is rejected with
its line number.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Union

import numpy as np
import pandas as pd

from lib.errors import EmptySampleError, InputError


logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ColumnData:
    """
    :param values: Parsed observations in file order.
    :param name: Header name, or the column position as a string when there is no header.
    :param blank_lines: Number of blank lines skipped.
    """
    values: np.ndarray
    name: str
    blank_lines: int = 0


def _is_number(cell: str) -> bool:
    try:
        return math.isfinite(float(cell))
    except ValueError:
        return False


def _is_blank(cell) -> bool:
    return cell is None or (isinstance(cell, float) and math.isnan(cell)) or str(cell).strip() == ""


def _read_cells(path: str) -> pd.DataFrame:
    try:
        return pd.read_csv(path, header=None, dtype=str, skip_blank_lines=False,
                           keep_default_na=False, encoding="utf-8")
    except FileNotFoundError as exc:
        raise InputError(f"Input file not found: {path}") from exc
    except pd.errors.EmptyDataError as exc:
        raise EmptySampleError(f"Input file {path} is empty") from exc
    except (pd.errors.ParserError, UnicodeDecodeError, OSError) as exc:
        raise InputError(f"Could not read {path}: {exc}") from exc


def _pick_column(header: Optional[List[str]], width: int, column: Union[str, int, None]) -> int:
    if column is None:
        if width > 1:
            logger.info("No column selected; reading the first of %d columns", width)
        return 0
    if header is not None and str(column) in header:
        return header.index(str(column))
    if str(column).isdigit() and int(column) < width:
        return int(column)
    available = header if header is not None else list(range(width))
    raise InputError(f"Column {column!r} not found; available: {available}")


def read_column(path: str, column: Union[str, int, None] = None) -> ColumnData:
    """
    Read one numeric column from a UTF-8 CSV file.

    A first row holding any non-numeric cell is taken as the header.

    :param path: The CSV file.
    :param column: Header name or zero-based position; the first column when None.
    :return: ColumnData
    """
    cells = _read_cells(path)
    rows = [list(row) for row in cells.itertuples(index=False, name=None)]
    line_numbers = list(range(1, len(rows) + 1))
    content = [(line, row) for line, row in zip(line_numbers, rows) if not all(_is_blank(c) for c in row)]
    blank_lines = len(rows) - len(content)
    if not content:
        raise EmptySampleError(f"Input file {path} has no data rows")

    header: Optional[List[str]] = None
    first_row = content[0][1]
    if any(not _is_blank(c) and not _is_number(str(c)) for c in first_row):
        header = [str(c).strip() for c in first_row]
        content = content[1:]
    index = _pick_column(header, cells.shape[1], column)
    name = header[index] if header is not None else str(index)

    values = []
    for line, row in content:
        cell = row[index]
        if _is_blank(cell):
            raise InputError(f"Line {line}: empty cell in column {name!r}")
        text = str(cell).strip()
        if not _is_number(text):
            raise InputError(f"Line {line}: {text!r} in column {name!r} is not a finite number")
        values.append(float(text))
    if blank_lines:
        logger.info("Skipped %d blank line(s) in %s", blank_lines, path)
    logger.info("Read %d observation(s) from column %r of %s", len(values), name, path)
    return ColumnData(values=np.asarray(values, dtype=float), name=name, blank_lines=blank_lines)
