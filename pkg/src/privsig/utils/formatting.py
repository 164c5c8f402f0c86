"""JSON and CSV rendering of command output."""

import csv
import io
import json
import math
from typing import Any, Iterable, Optional, Sequence

import numpy as np
from pydantic import BaseModel

from privsig.config import DEFAULTS


def format_number(value: float, digits: Optional[int] = None) -> str:
    """Shortest repr of value rounded to `digits` significant digits; inf/nan spelled out."""
    digits = DEFAULTS.json_significant_digits if digits is None else digits
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return repr(float(f"{value:.{digits}g}"))


def to_plain(obj: Any) -> Any:
    """
    Convert models, arrays and numpy scalars to JSON-ready Python values.

    Floats are rounded to the configured significant digits; infinities
    become the strings "inf" / "-inf" since JSON has no literal for them.
    """
    if isinstance(obj, BaseModel):
        return to_plain(obj.model_dump(by_alias=True))
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_plain(obj.tolist())
    if isinstance(obj, np.generic):
        return to_plain(obj.item())
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, float):
        if math.isfinite(obj):
            return float(format_number(obj))
        return format_number(obj)
    return str(obj)


def render_json(obj: Any) -> str:
    return json.dumps(to_plain(obj), indent=2) + "\n"


def render_csv(rows: Iterable[BaseModel], columns: Sequence[str]) -> str:
    """CSV with a header row; None fields are left empty."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        values = row.model_dump()
        writer.writerow([_cell(values.get(column)) for column in columns])
    return buffer.getvalue()


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return format_number(value)
    return str(value)
