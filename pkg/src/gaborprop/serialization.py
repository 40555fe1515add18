"""Deterministic JSON: sorted keys, 17 significant digits, infinities as strings."""
from __future__ import annotations

import json
import math

import numpy as np


def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    if x == 0:
        return "0.0"
    s = "%.17g" % x
    if "e" not in s and "." not in s and "inf" not in s:
        s += ".0"
    return s


def _encode(obj, indent: int, level: int) -> str:
    pad = "\n" + " " * (indent * (level + 1))
    end = "\n" + " " * (indent * level)
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, (complex, np.complexfloating)):
        return _encode({"re": obj.real, "im": obj.imag}, indent, level)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return _encode(obj.tolist(), indent, level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = sorted((str(k), v) for k, v in obj.items())
        body = ("," + pad).join(f"{json.dumps(k)}: {_encode(v, indent, level + 1)}" for k, v in items)
        return "{" + pad + body + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        parts = [_encode(v, indent, level + 1) for v in obj]
        # short numeric rows stay on one line
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(parts) + "]"
        return "[" + pad + ("," + pad).join(parts) + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    return _encode(obj, indent, 0) + "\n"


def parse_order(value) -> float:
    """Inverse of the order encoding: "inf" -> +inf, numbers pass through."""
    return float(value)
