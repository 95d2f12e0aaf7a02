"""JSON output with every float written to 17 significant digits."""
import json
import math

import numpy as np


def _encode(obj):
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "NaN"
        if math.isinf(x):
            return "Infinity" if x > 0 else "-Infinity"
        s = "%.17g" % x
        if "." not in s and "e" not in s and "n" not in s:
            s += ".0"
        return s
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_encode(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, np.ndarray):
        return _encode(obj.tolist())
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_encode(v) for v in obj) + "]"
    if hasattr(obj, "as_dict"):
        return _encode(obj.as_dict())
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj):
    return _encode(obj)


def dump_json(obj, path):
    with open(path, "w") as fh:
        fh.write(_encode(obj))
        fh.write("\n")
