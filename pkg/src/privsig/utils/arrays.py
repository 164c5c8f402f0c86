"""Pydantic-compatible numpy array fields."""

from typing import Annotated, Any

import numpy as np
from pydantic import PlainSerializer, PlainValidator


def _as_float_array(value: Any) -> np.ndarray:
    arr = np.array(value, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("array entries must be finite")
    arr.setflags(write=False)
    return arr


def _as_matrix(value: Any) -> np.ndarray:
    arr = _as_float_array(value)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
        arr.setflags(write=False)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {arr.shape}")
    return arr


def _to_list(arr: np.ndarray) -> list:
    return arr.tolist()


# Read-only float arrays; serialized as nested lists in JSON mode
Vector = Annotated[
    np.ndarray,
    PlainValidator(_as_float_array),
    PlainSerializer(_to_list, return_type=list, when_used="json"),
]

Matrix = Annotated[
    np.ndarray,
    PlainValidator(_as_matrix),
    PlainSerializer(_to_list, return_type=list, when_used="json"),
]
