"""
Serialization utilities for entrofunc results.

Converts estimates, numpy values, pydantic models and dataclasses into
JSON-compatible structures, and writes the bit-stable CSV tables produced by
the CLI (17 significant digits, LF line endings).
"""

import dataclasses
import warnings
from datetime import date, datetime
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Any

import numpy as np
import orjson
import pandas as pd
from pydantic import BaseModel

CSV_FLOAT_FORMAT = "%.17g"


def to_jsonable(obj: Any) -> Any:
    """
    Convert any result object to a JSON-serializable format.

    Handles:
    - numpy arrays and scalars
    - pydantic models and dataclasses (estimates, reports, intervals)
    - enums, fractions, datetimes and paths
    - NaN and infinity values

    Examples:
        >>> to_jsonable(np.array([1, 2, 3]))
        [1, 2, 3]

        >>> to_jsonable(float("nan")) is None
        True
    """
    if obj is None:
        return None

    if isinstance(obj, BaseModel):
        return to_jsonable(obj.model_dump(mode="json", by_alias=True))
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        fields = {f.name: getattr(obj, f.name) for f in dataclasses.fields(obj)}
        return to_jsonable(fields)

    if isinstance(obj, np.ndarray):
        if obj.ndim == 0:
            return to_jsonable(obj.item())
        return to_jsonable(obj.tolist())
    if isinstance(obj, np.bool_ | bool):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating | float):
        value = float(obj)
        if np.isnan(value):
            return None
        if np.isinf(value):
            return "Infinity" if value > 0 else "-Infinity"
        return value

    if isinstance(obj, Enum):
        return to_jsonable(obj.value)
    if isinstance(obj, Fraction):
        return {"numerator": obj.numerator, "denominator": obj.denominator}
    if isinstance(obj, datetime | date):
        return obj.isoformat()
    if isinstance(obj, Path):
        return str(obj)

    if isinstance(obj, dict):
        return {str(key): to_jsonable(value) for key, value in obj.items()}
    if isinstance(obj, list | tuple | set):
        return [to_jsonable(item) for item in obj]
    if isinstance(obj, str | int):
        return obj

    warnings.warn(
        f"Converting {type(obj)} to string for JSON serialization",
        UserWarning,
        stacklevel=2,
    )
    return str(obj)


def safe_json_dumps(obj: Any, indent: bool = False) -> str:
    """Serialize through to_jsonable with orjson."""
    option = orjson.OPT_INDENT_2 if indent else 0
    return orjson.dumps(to_jsonable(obj), option=option).decode("utf-8")


def write_json(path: Path, obj: Any) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(safe_json_dumps(obj, indent=True) + "\n", encoding="utf-8")
    return path


def write_csv(path: Path, table: pd.DataFrame) -> Path:
    """Write a results table: '.' decimals, 17 significant digits, LF endings."""
    path.parent.mkdir(parents=True, exist_ok=True)
    table.to_csv(
        path,
        index=False,
        float_format=CSV_FLOAT_FORMAT,
        lineterminator="\n",
        encoding="utf-8",
    )
    return path
