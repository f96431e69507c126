"""Deterministic JSON report assembly.

Floats are rendered with a fixed 17-significant-digit format and object keys
are emitted sorted, so identical analyses serialize to byte-identical
documents.
"""

import numpy as np

from .errors import InvalidArgumentError

__all__ = ["dumps_canonical", "jsonable"]


def _fmt_float(x):
    if not np.isfinite(x):
        raise InvalidArgumentError("reports must not contain non-finite numbers")
    out = format(float(x), ".17g")
    # '.17g' may produce ints ('1'), keep them valid JSON numbers as-is
    return out


def _write(obj, parts):
    if obj is None:
        parts.append("null")
    elif obj is True:
        parts.append("true")
    elif obj is False:
        parts.append("false")
    elif isinstance(obj, (int, np.integer)) and not isinstance(obj, bool):
        parts.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        parts.append(_fmt_float(obj))
    elif isinstance(obj, str):
        import json
        parts.append(json.dumps(obj))
    elif isinstance(obj, dict):
        parts.append("{")
        for k, key in enumerate(sorted(obj)):
            if not isinstance(key, str):
                raise InvalidArgumentError("report keys must be strings")
            if k:
                parts.append(",")
            import json
            parts.append(json.dumps(key))
            parts.append(":")
            _write(obj[key], parts)
        parts.append("}")
    elif isinstance(obj, (list, tuple)):
        parts.append("[")
        for k, item in enumerate(obj):
            if k:
                parts.append(",")
            _write(item, parts)
        parts.append("]")
    else:
        raise InvalidArgumentError(f"cannot serialize {type(obj)} into a report")


def dumps_canonical(obj):
    """Canonical JSON text: sorted keys, fixed float format, no whitespace."""
    parts = []
    _write(jsonable(obj), parts)
    return "".join(parts) + "\n"


def jsonable(obj):
    """Recursively convert numpy containers to plain Python."""
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, dict):
        return {k: jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    return obj
