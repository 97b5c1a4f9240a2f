"""Pass/fail records and JSON conversion helpers."""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

import numpy as np

TOOL_VERSION = "0.1.0"


@dataclass
class Check:
    """Outcome of one machine-checked inequality or identity."""

    name: str
    passed: bool
    witness: Any = None
    details: dict = field(default_factory=dict)

    def __bool__(self):
        return bool(self.passed)

    def to_json(self) -> dict:
        return jsonable({"name": self.name, "passed": self.passed, "witness": self.witness, "details": self.details})


def jsonable(obj):
    """Recursively convert library values into JSON-serialisable data.

    Fractions become "n/d" strings, sets become sorted lists, non-finite
    floats become strings so the output stays strict JSON.
    """
    if hasattr(obj, "to_json") and not isinstance(obj, type):
        return jsonable(obj.to_json())
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, complex):
        return [jsonable(obj.real), jsonable(obj.imag)]
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (set, frozenset)):
        return sorted(jsonable(v) for v in obj)
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if dataclasses.is_dataclass(obj):
        return {f.name: jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return str(obj)


def dumps(obj, **kw) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, **kw)
