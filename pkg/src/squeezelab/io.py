"""CSV / JSON serialisation shared by the command-line tools.

CSV files are comma separated, UTF-8, with ``#`` comment lines on top for
metadata. Floats are written with 17 significant digits so they read back
bit-identically.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return f"{x:.17g}"
    return str(x)


def write_csv(path, header, rows, comments=()) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        for c in comments:
            fh.write(f"# {c}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def read_csv(path) -> tuple[list[str], list[str], list[list[str]]]:
    """Return ``(comments, header, rows)`` with rows left as strings."""
    comments, lines = [], []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#"):
                comments.append(line[1:].strip())
            elif line.strip():
                lines.append(line)
    reader = csv.reader(lines)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        return comments, [], []
    return comments, header, [[c.strip() for c in r] for r in reader]


def read_columns(path, required) -> dict[str, np.ndarray]:
    """Numeric columns by name; raises ``KeyError`` naming a missing column."""
    _, header, rows = read_csv(path)
    out = {}
    for name in required:
        if name not in header:
            raise KeyError(f"{path}: missing column {name!r} (have {header})")
        j = header.index(name)
        try:
            out[name] = np.array([float(r[j]) for r in rows])
        except (ValueError, IndexError) as exc:
            raise ValueError(f"{path}: malformed value in column {name!r}: {exc}") from None
    return out


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def dumps_json(obj) -> str:
    # repr-based float output is the shortest exact round trip
    return json.dumps(_jsonable(obj), indent=2, allow_nan=False) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(dumps_json(obj), encoding="utf-8")


def read_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))
