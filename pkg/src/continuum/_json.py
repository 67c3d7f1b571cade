"""JSON helpers: numpy conversion and string sentinels for non-finite floats."""

from __future__ import annotations

import json
import math

import numpy as np


def jsonable(obj):
    """Convert numpy containers to plain Python; map inf/nan to strings."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return jsonable(obj.item())
    if isinstance(obj, float):
        if math.isnan(obj):
            return "nan"
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
    return obj


def as_float(x) -> float:
    """Inverse of the sentinel mapping for a single value."""
    return float(x)


def dumps(obj, **kwargs) -> str:
    return json.dumps(jsonable(obj), allow_nan=False, **kwargs)
