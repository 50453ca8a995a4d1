"""Deterministic CSV and JSON output with a metadata header."""
from __future__ import annotations

import json
import math
import os

import numpy as np

__all__ = ["write_csv", "write_json", "read_csv"]


def _version():
    from . import __version__

    return __version__


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x) if x == x else "nan"


def write_csv(path, columns: dict, meta: dict | None = None) -> str:
    """Write equal-length columns; ``meta`` lines go first as '# key: value'."""
    names = list(columns)
    data = [np.asarray(columns[n]).reshape(-1) for n in names]
    n = data[0].size if data else 0
    if any(d.size != n for d in data):
        raise ValueError("all columns must have the same length")
    head = {"version": _version(), **(meta or {})}
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for k, v in head.items():
            fh.write(f"# {k}: {v}\n")
        fh.write(",".join(names) + "\n")
        for i in range(n):
            fh.write(",".join(_fmt(d[i]) for d in data) + "\n")
    return path


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")
    return obj


def write_json(path, payload: dict, meta: dict | None = None) -> str:
    doc = {"meta": {"version": _version(), **(meta or {})}, **_plain(payload)}
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def read_csv(path):
    """Return (meta, columns) from a file written by :func:`write_csv`."""
    meta, rows, names = {}, [], None
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("# "):
                k, _, v = line[2:].partition(": ")
                meta[k] = v
            elif names is None:
                names = line.split(",")
            elif line:
                rows.append([float(x) for x in line.split(",")])
    arr = np.array(rows, dtype=float).reshape(-1, len(names))
    return meta, {n: arr[:, i] for i, n in enumerate(names)}
