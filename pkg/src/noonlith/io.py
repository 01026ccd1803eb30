"""Flat-file serialization: CSV tables, JSON documents and 16-bit PGM heatmaps.

Every writer goes through :func:`atomic_write`, so a crashed run never
leaves a half-written file behind. Floats are written with ``repr`` and
read back with ``float``, which round-trips IEEE doubles exactly and never
depends on the locale.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

SCHEMA_VERSION = "1"
PGM_MAX = 65535


def atomic_write(path, data: bytes) -> Path:
    """Write ``data`` to a temp file next to ``path`` and rename it into place."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise
    return path


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _csv_bytes(header, rows) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue().encode("ascii")


def _read_rows(path, header):
    with open(path, newline="", encoding="ascii") as fh:
        r = csv.reader(fh)
        got = next(r)
        if got != list(header):
            raise ValueError(f"{path}: expected header {','.join(header)}, got {','.join(got)}")
        return [row for row in r if row]


# --- CSV --------------------------------------------------------------------

def write_map_csv(path, values, indices=None) -> Path:
    """Coincidence map as long-format ``s,t,p`` rows (s outer, t inner)."""
    v = np.asarray(values, dtype=float)
    n = v.shape[0]
    idx = np.arange(n) - (n - 1) // 2 if indices is None else np.asarray(indices)
    rows = ((int(idx[i]), int(idx[j]), v[i, j]) for i in range(n) for j in range(n))
    return atomic_write(path, _csv_bytes(("s", "t", "p"), rows))


def read_map_csv(path):
    """Inverse of :func:`write_map_csv`; returns ``(indices, values)``."""
    rows = _read_rows(path, ("s", "t", "p"))
    s = np.array([int(r[0]) for r in rows])
    t = np.array([int(r[1]) for r in rows])
    p = np.array([float(r[2]) for r in rows])
    idx = np.unique(s)
    if not np.array_equal(idx, np.unique(t)) or p.size != idx.size**2:
        raise ValueError(f"{path}: rows do not form a square s,t grid")
    out = np.empty((idx.size, idx.size))
    out[np.searchsorted(idx, s), np.searchsorted(idx, t)] = p
    return idx, out


def write_pattern_csv(path, values, indices=None) -> Path:
    v = np.asarray(values, dtype=float)
    idx = np.arange(v.size) - (v.size - 1) // 2 if indices is None else np.asarray(indices)
    return atomic_write(path, _csv_bytes(("s", "p"), zip(idx.tolist(), v)))


def read_pattern_csv(path):
    rows = _read_rows(path, ("s", "p"))
    return np.array([int(r[0]) for r in rows]), np.array([float(r[1]) for r in rows])


def write_scan_csv(path, positions, values, envelope) -> Path:
    return atomic_write(path, _csv_bytes(("x", "p", "envelope"), zip(positions, values, envelope)))


def read_scan_csv(path):
    rows = _read_rows(path, ("x", "p", "envelope"))
    cols = np.array([[float(c) for c in r] for r in rows]).reshape(-1, 3)
    return cols[:, 0], cols[:, 1], cols[:, 2]


# --- JSON -------------------------------------------------------------------

def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else repr(f)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    return obj


def write_json(path, payload: dict) -> Path:
    """Sorted-key JSON with ``schema_version`` injected; stable across runs."""
    doc = {"schema_version": SCHEMA_VERSION, **_jsonable(payload)}
    text = json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"
    return atomic_write(path, text.encode("utf-8"))


def read_json(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"{path}: unsupported schema_version {doc.get('schema_version')!r}")
    return doc


# --- PGM --------------------------------------------------------------------

PGM_COMMENT = ("noonlith heatmap: column = s (left to right increasing), row = t (top row is the "
               "largest t), lighter = higher coincidence rate, pixel = round(65535 * p / max p)")


def heatmap_pixels(values) -> np.ndarray:
    """16-bit pixel array of a map ``values[s, t]`` in image (row, column) order."""
    v = np.asarray(values, dtype=float)
    top = v.max()
    if not top > 0:
        raise ValueError("heatmap needs a positive maximum")
    scaled = np.rint(PGM_MAX * (v / top)).astype(np.uint16)
    return scaled.T[::-1, :]


def write_pgm(path, values, comment: str = PGM_COMMENT) -> Path:
    """Binary (P5) 16-bit big-endian grayscale heatmap of ``values[s, t]``."""
    pix = heatmap_pixels(values)
    h, w = pix.shape
    header = f"P5\n# {comment}\n{w} {h}\n{PGM_MAX}\n".encode("ascii")
    return atomic_write(path, header + pix.astype(">u2").tobytes())


def read_pgm(path) -> np.ndarray:
    """Pixel array (row, column) of a 16-bit P5 file written by :func:`write_pgm`."""
    data = Path(path).read_bytes()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        end = pos
        while not data[end:end + 1].isspace():
            end += 1
        tokens.append(data[pos:end].decode("ascii"))
        pos = end
    pos += 1
    if tokens[0] != "P5":
        raise ValueError(f"{path}: not a binary PGM")
    w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    dtype = ">u2" if maxval > 255 else "u1"
    return np.frombuffer(data[pos:], dtype=dtype, count=w * h).reshape(h, w).astype(np.int64)
