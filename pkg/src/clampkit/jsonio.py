"""Deterministic JSON emission with 17-significant-digit floats.

The stdlib encoder prints floats with shortest round-trip repr and offers no
hook to change that, so this module hand-rolls the emitter. Output is byte
stable for identical inputs: dict insertion order is preserved and floats are
always formatted with ``%.17g``, which round-trips IEEE doubles exactly.
Parsing stays with ``json.loads``.
"""

from __future__ import annotations

import json
import math
from typing import Any

import numpy as np

_ESCAPES = {
    '"': '\\"',
    "\\": "\\\\",
    "\n": "\\n",
    "\r": "\\r",
    "\t": "\\t",
    "\b": "\\b",
    "\f": "\\f",
}


def format_float(x: float) -> str:
    """Render a finite float with 17 significant digits."""
    if math.isnan(x) or math.isinf(x):
        raise ValueError(f"non-finite value {x!r} cannot be serialized")
    return format(x, ".17g")


def _escape(s: str) -> str:
    out = []
    for ch in s:
        if ch in _ESCAPES:
            out.append(_ESCAPES[ch])
        elif ord(ch) < 0x20:
            out.append(f"\\u{ord(ch):04x}")
        else:
            out.append(ch)
    return '"' + "".join(out) + '"'


def dumps(obj: Any) -> str:
    """Serialize to compact JSON text (no whitespace, stable byte output)."""
    return "".join(_emit(obj))


def _emit(obj: Any):
    if obj is None:
        yield "null"
    elif obj is True:
        yield "true"
    elif obj is False:
        yield "false"
    elif isinstance(obj, str):
        yield _escape(obj)
    elif isinstance(obj, (int, np.integer)) and not isinstance(obj, bool):
        yield str(int(obj))
    elif isinstance(obj, (float, np.floating)):
        yield format_float(float(obj))
    elif isinstance(obj, dict):
        yield "{"
        first = True
        for key, value in obj.items():
            if not isinstance(key, str):
                raise TypeError(f"JSON object keys must be strings, got {key!r}")
            if not first:
                yield ","
            first = False
            yield _escape(key)
            yield ":"
            yield from _emit(value)
        yield "}"
    elif isinstance(obj, (list, tuple)) or isinstance(obj, np.ndarray):
        yield "["
        first = True
        for item in (obj.tolist() if isinstance(obj, np.ndarray) else obj):
            if not first:
                yield ","
            first = False
            yield from _emit(item)
        yield "]"
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__} to JSON")


def loads(text: str) -> Any:
    return json.loads(text)
