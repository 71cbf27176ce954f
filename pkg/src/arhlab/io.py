"""File formats: sample and operator CSVs with grid sidecars, JSON reports, run manifests.

A sample CSV has header ``t0,t1,...`` and one row per curve.  The grid lives
next to it in ``<name>.grid.csv``: a header ``t0,...`` and one row of points
(a ``blocks`` column is appended for product grids).  Operator CSVs hold the
m x m kernel with the same sidecar.  All writes are atomic.
"""

from __future__ import annotations

import csv
import hashlib
import io as _io
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .hilbert import Grid, OperatorMatrix, Sample

SCHEMA_VERSION = 1


def atomic_write(path, data: str | bytes) -> Path:
    """Write to a temporary file in the target directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, mode, **({} if mode == "wb" else {"newline": ""})) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _fmt(v: float) -> str:
    return repr(float(v))


def _rows_to_csv(header, rows) -> str:
    buf = _io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    for r in rows:
        wr.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def grid_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".grid.csv")


def _header(m: int) -> list[str]:
    return [f"t{i}" for i in range(m)]


def write_grid(path, grid: Grid) -> Path:
    header = _header(grid.size)
    row = list(grid.points)
    if grid.blocks > 1:
        header, row = header + ["blocks"], row + [grid.blocks]
    return atomic_write(path, _rows_to_csv(header, [row]))


def read_grid(path) -> Grid:
    rows = _read_rows(path)
    if len(rows) != 2:
        raise ValueError(f"{path}: grid file must have a header and one row")
    header, vals = rows
    pts = [float(v) for v, h in zip(vals, header) if h != "blocks"]
    grid = Grid.from_points(pts)
    if "blocks" in header and grid.blocks != int(float(vals[header.index("blocks")])):
        raise ValueError(f"{path}: block count does not match the points")
    return grid


def _read_rows(path) -> list[list[str]]:
    with open(path, newline="") as fh:
        return [r for r in csv.reader(fh) if r]


def write_sample(path, sample: Sample) -> Path:
    path = Path(path)
    write_grid(grid_path(path), sample.grid)
    return atomic_write(path, _rows_to_csv(_header(sample.grid.size), sample.values))


def read_sample(path, grid: Grid | None = None) -> Sample:
    """Read a sample CSV; the grid comes from the sidecar, else ``grid``, else uniform."""
    path = Path(path)
    rows = _read_rows(path)
    if not rows:
        raise ValueError(f"{path}: empty file")
    header, body = rows[0], rows[1:]
    m = len(header)
    if header != _header(m):
        raise ValueError(f"{path}: header must be t0,...,t{m - 1}")
    vals = np.empty((len(body), m))
    for i, r in enumerate(body):
        if len(r) != m:
            raise ValueError(f"{path}: row {i + 2} has {len(r)} fields, expected {m}")
        try:
            vals[i] = [float(v) for v in r]
        except ValueError:
            raise ValueError(f"{path}: row {i + 2} is not numeric") from None
    if not np.all(np.isfinite(vals)):
        raise ValueError(f"{path}: non-finite values")
    side = grid_path(path)
    if side.exists():
        grid = read_grid(side)
    elif grid is None:
        grid = Grid.uniform(m)
    if grid.size != m:
        raise ValueError(f"{path}: {m} columns but the grid has {grid.size} points")
    return Sample(grid, vals)


def write_operator(path, op: OperatorMatrix) -> Path:
    path = Path(path)
    write_grid(grid_path(path), op.grid)
    return atomic_write(path, _rows_to_csv(_header(op.grid.size), op.kernel))


def read_operator(path) -> OperatorMatrix:
    s = read_sample(path)
    if s.values.shape[0] != s.grid.size:
        raise ValueError(f"{path}: operator kernel must be square")
    return OperatorMatrix(s.grid, s.values)


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, Path):
        return str(obj)
    return obj


def to_json(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(path, obj) -> Path:
    return atomic_write(path, to_json(obj))


def read_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_long_csv(path, series: dict) -> Path:
    """Plot-ready long format ``series,t,value``; ``series`` maps names to (t, values)."""
    buf = _io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["series", "t", "value"])
    for name, (t, v) in series.items():
        for ti, vi in zip(np.asarray(t, dtype=float), np.asarray(v, dtype=float)):
            wr.writerow([name, _fmt(ti), _fmt(vi)])
    return atomic_write(path, buf.getvalue())


def write_manifest(out_dir, command: str, params: dict, inputs=(), outputs=()) -> Path:
    """Run manifest: schema version, command, full parameters, input hashes, outputs.

    No timestamps or host data are recorded, so identical runs give identical files.
    """
    out_dir = Path(out_dir)
    man = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "parameters": params,
        "inputs": {str(p): sha256_file(p) for p in inputs},
        "outputs": sorted(str(Path(p).relative_to(out_dir)) if Path(p).is_relative_to(out_dir)
                          else str(p) for p in outputs),
    }
    return write_json(out_dir / "manifest.json", man)
