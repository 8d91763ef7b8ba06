"""
CSV ingestion/export of functional time series and JSON report storage.

CSV layout: rows are time, columns are functional grid points. An optional
first row names the columns, either as grid positions written ``tau=<x>`` or
as free-form channel labels (mapped to equally spaced grid points in order).
"""
import csv
import io
import logging
import math
from pathlib import Path
from typing import List, Optional, Sequence, TextIO, Union

import numpy as np
from pydantic import ValidationError
from scipy.ndimage import uniform_filter1d

from bandscan.core import FunctionalTimeSeries, channel_grid
from bandscan.errors import (
    MalformedReportError,
    NonNumericCellError,
    ParseError,
    RaggedRowError,
    StorageError,
    TooFewRowsError,
)
from bandscan.schemas import AnalysisReport

logger = logging.getLogger(__name__)

GRID_PREFIX = "tau="

PathLike = Union[str, Path]


def _to_float(cell: str) -> Optional[float]:
    try:
        value = float(cell)
    except ValueError:
        return None
    return value if math.isfinite(value) else None


def _parse_header(cells: List[str]):
    """Grid positions and labels from a header row."""
    if all(cell.startswith(GRID_PREFIX) for cell in cells):
        positions = [_to_float(cell[len(GRID_PREFIX):]) for cell in cells]
        if None not in positions:
            return np.array(positions), None
    return channel_grid(len(cells)), tuple(cells)


def parse_csv_text(
    text: Union[str, TextIO],
    decimate: int = 1,
    center: bool = False,
    anti_alias: bool = False,
    sample_rate_hz: Optional[float] = None,
    max_rows: Optional[int] = None,
) -> FunctionalTimeSeries:
    stream = io.StringIO(text) if isinstance(text, str) else text
    reader = csv.reader(stream)
    grid = labels = None
    width = None
    rows: List[List[float]] = []
    for line_no, cells in enumerate(reader, start=1):
        cells = [cell.strip() for cell in cells]
        if not cells or all(cell == "" for cell in cells):
            continue
        if width is None:
            width = len(cells)
            if all(_to_float(cell) is None for cell in cells):
                grid, labels = _parse_header(cells)
                continue
        elif len(cells) != width:
            raise RaggedRowError(row=line_no, expected=width, found=len(cells))
        row = []
        for column, cell in enumerate(cells, start=1):
            value = _to_float(cell)
            if value is None:
                raise NonNumericCellError(row=line_no, column=column, value=cell)
            row.append(value)
        rows.append(row)
        if max_rows is not None and len(rows) > max_rows:
            raise ParseError(f"input has more than {max_rows} rows", max_rows=max_rows)

    if len(rows) < 2:
        raise TooFewRowsError(found=len(rows))
    values = np.array(rows)
    if grid is None:
        grid = channel_grid(values.shape[1])

    if decimate > 1:
        if anti_alias:
            values = uniform_filter1d(values, size=decimate, axis=0, mode="nearest")
        values = values[::decimate]
        if values.shape[0] < 2:
            raise TooFewRowsError(found=values.shape[0])
        if sample_rate_hz is not None:
            sample_rate_hz = sample_rate_hz / decimate
        logger.info("decimated by %d to %d rows%s", decimate, values.shape[0],
                    " after moving-average filter" if anti_alias else "")
    if center:
        values = values - values.mean(axis=0, keepdims=True)
    return FunctionalTimeSeries(values=values, grid=grid, sample_rate_hz=sample_rate_hz, labels=labels)


def ingest_csv(
    path: PathLike,
    decimate: int = 1,
    center: bool = False,
    anti_alias: bool = False,
    sample_rate_hz: Optional[float] = None,
) -> FunctionalTimeSeries:
    try:
        with open(path, newline="", encoding="utf-8") as handle:
            return parse_csv_text(handle, decimate=decimate, center=center, anti_alias=anti_alias,
                                  sample_rate_hz=sample_rate_hz)
    except OSError as e:
        raise StorageError(f"cannot read {path}: {e.strerror or e}", path=str(path)) from e


def format_csv(X: FunctionalTimeSeries) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    if X.labels is not None:
        writer.writerow(X.labels)
    else:
        writer.writerow([f"{GRID_PREFIX}{point:.17g}" for point in X.grid])
    for row in X.values:
        writer.writerow([format(value, ".17g") for value in row])
    return buffer.getvalue()


def write_csv(X: FunctionalTimeSeries, path: PathLike) -> None:
    try:
        Path(path).write_text(format_csv(X), encoding="utf-8")
    except OSError as e:
        raise StorageError(f"cannot write {path}: {e.strerror or e}", path=str(path)) from e


def write_report(report: AnalysisReport, path: PathLike) -> None:
    try:
        Path(path).write_text(report.model_dump_json(indent=2) + "\n", encoding="utf-8")
    except OSError as e:
        raise StorageError(f"cannot write {path}: {e.strerror or e}", path=str(path)) from e


def parse_report(text: str) -> AnalysisReport:
    try:
        return AnalysisReport.model_validate_json(text)
    except ValidationError as e:
        raise MalformedReportError(f"report does not match the schema: {e.error_count()} error(s)",
                                   errors=[err["msg"] for err in e.errors()]) from e


def read_report(path: PathLike) -> AnalysisReport:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise StorageError(f"cannot read {path}: {e.strerror or e}", path=str(path)) from e
    return parse_report(text)


def parse_cuts(text: Sequence[str]) -> List[float]:
    """Cut frequencies from a comma-separated string or a list of strings."""
    if isinstance(text, str):
        text = [part for part in text.split(",") if part.strip()]
    cuts = []
    for part in text:
        value = _to_float(str(part).strip())
        if value is None:
            raise ParseError(f"cut {part!r} is not a number", value=str(part))
        cuts.append(value)
    return cuts
