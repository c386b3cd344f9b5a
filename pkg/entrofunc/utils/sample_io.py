"""
Sample files: UTF-8 CSV, one observation per row, d numeric columns.

A single header row is allowed and detected by its first cell not parsing as
a number. Discrete samples must hold integer-parsable cells.
"""

from pathlib import Path

import numpy as np
import pandas as pd

from entrofunc.errors import InputFileError, InvalidArgumentError
from entrofunc.models import Sample, SampleMode
from entrofunc.utils.serialization import CSV_FLOAT_FORMAT


def _has_header(path: Path) -> bool:
    with path.open(encoding="utf-8") as handle:
        first = handle.readline().strip()
    if not first:
        return False
    try:
        float(first.split(",")[0])
    except ValueError:
        return True
    return False


def read_sample(path: Path | str, mode: SampleMode | str = SampleMode.CONTINUOUS) -> Sample:
    """Load a sample file."""
    path = Path(path)
    mode = SampleMode(mode)
    if not path.is_file():
        raise InputFileError(f"sample file not found: {path}", path=str(path))
    try:
        frame = pd.read_csv(
            path,
            header=0 if _has_header(path) else None,
            dtype=str,
            skip_blank_lines=True,
            encoding="utf-8",
        )
    except (UnicodeDecodeError, pd.errors.ParserError) as exc:
        raise InputFileError(f"cannot parse {path}: {exc}", path=str(path)) from exc
    except pd.errors.EmptyDataError:
        frame = pd.DataFrame()

    if frame.empty:
        raise InputFileError(f"no observations in {path}", path=str(path))
    frame = frame.apply(lambda col: col.str.strip())
    if frame.isna().any().any():
        raise InputFileError(f"missing cells in {path}", path=str(path))

    try:
        if mode is SampleMode.DISCRETE:
            values = frame.apply(pd.to_numeric).to_numpy()
            if not np.issubdtype(values.dtype, np.integer):
                raise InputFileError(
                    f"discrete samples need integer cells: {path}", path=str(path)
                )
            return Sample.discrete(values.astype(np.int64))
        values = frame.apply(pd.to_numeric).to_numpy(dtype=np.float64)
        return Sample.continuous(values)
    except InvalidArgumentError as exc:
        raise InputFileError(f"invalid sample in {path}: {exc}", path=str(path)) from exc
    except ValueError as exc:
        raise InputFileError(f"non-numeric cell in {path}: {exc}", path=str(path)) from exc


def write_sample(path: Path | str, sample: Sample, header: bool = False) -> Path:
    """Write a sample so that read_sample returns identical points."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    columns = [f"x{k + 1}" for k in range(sample.d)]
    frame = pd.DataFrame(np.asarray(sample.points), columns=columns)
    frame.to_csv(
        path,
        index=False,
        header=header,
        float_format=None if sample.mode is SampleMode.DISCRETE else CSV_FLOAT_FORMAT,
        lineterminator="\n",
        encoding="utf-8",
    )
    return path
