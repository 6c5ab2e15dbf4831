"""CSV reports, spinor files and key-value manifests.

Floats are written with ``repr`` so identical computations give
byte-identical files.
"""
from __future__ import annotations

import csv
import io as _io
import os
import struct
import tempfile
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .lattice import Grid

SPINOR_MAGIC = b"MDSP"


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def csv_text(header: list[str], rows: Iterable[Mapping]) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(row[h]) for h in header])
    return buf.getvalue()


def atomic_write(path: str | os.PathLike, data: str | bytes) -> Path:
    """Write to a sibling temporary file, fsync, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_csv(path, header: list[str], rows: Iterable[Mapping]) -> Path:
    return atomic_write(path, csv_text(header, rows))


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# ------------------------------------------------------------------ spinor files

def write_spinor(path, u: np.ndarray, grid: Grid) -> Path:
    """Binary layout: magic, N (int64), L and center (4 float64), then the
    (4, N, N, N) array in row-major order as little-endian complex128."""
    if u.shape != (4,) + grid.shape:
        raise ValueError(f"spinor shape {u.shape} does not match grid {grid.shape}")
    header = SPINOR_MAGIC + struct.pack("<q4d", grid.N, grid.L, *map(float, grid.center))
    body = np.ascontiguousarray(u, dtype="<c16").tobytes()
    return atomic_write(path, header + body)


def read_spinor(path) -> tuple[np.ndarray, Grid]:
    raw = Path(path).read_bytes()
    if raw[:4] != SPINOR_MAGIC:
        raise ValueError(f"{path}: not a spinor file")
    N, L, cx, cy, cz = struct.unpack("<q4d", raw[4:44])
    grid = Grid(int(N), L, (cx, cy, cz))
    body = np.frombuffer(raw[44:], dtype="<c16")
    if body.size != 4 * N ** 3:
        raise ValueError(f"{path}: expected {4 * N ** 3} complex values, found {body.size}")
    return body.reshape((4,) + grid.shape).astype(complex), grid


# ------------------------------------------------------------------ manifests

def manifest_text(entries: Mapping) -> str:
    """Plain ``key = value`` lines in insertion order."""
    lines = []
    for k, v in entries.items():
        if isinstance(v, (list, tuple)):
            v = ",".join(_fmt(x) for x in v)
        lines.append(f"{k} = {_fmt(v)}")
    return "\n".join(lines) + "\n"


def read_manifest(path) -> dict[str, str]:
    out = {}
    for line in Path(path).read_text().splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        key, _, value = line.partition(" = ")
        out[key.strip()] = value
    return out


def algebra_rows(results) -> list[dict]:
    return [{"check": name, "residual": float(res)} for name, res in results]
