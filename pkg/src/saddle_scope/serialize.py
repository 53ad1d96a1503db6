"""Canonical JSON (sorted keys, 17 significant digits) and CSV writers."""
from __future__ import annotations

import csv
import io
import json
import math

import numpy as np

__all__ = ["dumps", "dump_lines", "format_float", "write_csv"]


def format_float(x):
    x = float(x)
    if not math.isfinite(x):
        return "null"
    text = f"{x:.17g}"
    # keep a float marker so values re-parse as floats
    if not any(ch in text for ch in ".en"):
        text += ".0"
    return text


def _encode(obj, out):
    if obj is None:
        out.append("null")
    elif isinstance(obj, (bool, np.bool_)):
        out.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(format_float(obj))
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, dict):
        out.append("{")
        for i, key in enumerate(sorted(obj, key=str)):
            if i:
                out.append(",")
            out.append(json.dumps(str(key), ensure_ascii=False))
            out.append(":")
            _encode(obj[key], out)
        out.append("}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        out.append("[")
        for i, item in enumerate(obj):
            if i:
                out.append(",")
            _encode(item, out)
        out.append("]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj):
    """Serialize to canonical single-line JSON.

    Parsing the output and serializing again yields the same bytes.
    Non-finite floats become ``null``.
    """
    out = []
    _encode(obj, out)
    return "".join(out)


def dump_lines(items):
    return "".join(dumps(item) + "\n" for item in items)


def write_csv(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_float(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()
