"""On-disk formats: checkpoints, field snapshots, summary JSON.

Checkpoints and large-grid snapshots share one container: an 8-byte magic,
an 8-byte little-endian header length, a JSON header (format version, kind,
time, grid metadata, array manifest), then the raw little-endian float64
bytes of each array in manifest order.  The container stores the conserved
variables, so a save/load round trip is bit exact and a resumed run
continues from exactly the state the checkpoint captured.

Small grids additionally get human-readable CSV snapshots with one column
per field component (coordinates, density, velocity, temperature, heat flux,
bulk stress).  CSV stores primitives at 17 significant digits, which round
trips every float64 exactly; rebuilding a field from them goes back through
the conserved variables, and the temperature recovered from those can move
in its last bit.  Checkpoints therefore always use the binary container.

Summaries are JSON with sorted keys.  Non-finite floats have no JSON
representation and are written as null.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from .grid import Grid
from .solver import Field, field_from_primitive
from .thermo import ConservedState, ModelParams, PrimitiveState

__all__ = [
    "FORMAT_VERSION",
    "save_checkpoint",
    "load_checkpoint",
    "snapshot_is_small",
    "write_snapshot",
    "load_snapshot",
    "write_summary",
    "read_summary",
    "sanitize_for_json",
]

MAGIC = b"HYPERNS\x00"
FORMAT_VERSION = 1

#: Grids up to this many cells get CSV snapshots; larger ones get the
#: binary container.
SMALL_GRID_CELLS = 4096

_AXES = ("x", "y", "z")


def _array_manifest(cons: ConservedState):
    return [("rho", cons.rho), ("mom", cons.mom), ("etot", cons.etot),
            ("q", cons.q), ("s2", cons.s2)]


def _save_container(path, f: Field, kind: str) -> None:
    manifest = _array_manifest(f.cons)
    header = {
        "format_version": FORMAT_VERSION,
        "kind": kind,
        "t": float(f.t),
        "grid": {
            "lo": list(f.grid.lo),
            "hi": list(f.grid.hi),
            "cells": list(f.grid.cells),
            "bc": list(f.grid.bc),
            "ghost": f.grid.ghost,
        },
        "arrays": [{"name": name, "shape": list(arr.shape)}
                   for name, arr in manifest],
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for _, arr in manifest:
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def _load_container(path, expect_kind=None):
    with open(path, "rb") as fh:
        magic = fh.read(len(MAGIC))
        if magic != MAGIC:
            raise ValueError(f"{path}: not a field container (bad magic)")
        (hlen,) = struct.unpack("<Q", fh.read(8))
        header = json.loads(fh.read(hlen).decode("utf-8"))
        if header.get("format_version") != FORMAT_VERSION:
            raise ValueError(f"{path}: unsupported format version "
                             f"{header.get('format_version')!r}")
        if expect_kind is not None and header["kind"] != expect_kind:
            raise ValueError(f"{path}: expected a {expect_kind} container, "
                             f"found {header['kind']!r}")
        arrays = {}
        for entry in header["arrays"]:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            buf = fh.read(8 * count)
            if len(buf) != 8 * count:
                raise ValueError(f"{path}: truncated array {entry['name']!r}")
            arrays[entry["name"]] = np.frombuffer(buf, dtype="<f8").astype(
                np.float64).reshape(shape)
    gmeta = header["grid"]
    grid = Grid(tuple(gmeta["lo"]), tuple(gmeta["hi"]), tuple(gmeta["cells"]),
                tuple(gmeta["bc"]), ghost=int(gmeta["ghost"]))
    cons = ConservedState(rho=arrays["rho"], mom=arrays["mom"],
                          etot=arrays["etot"], q=arrays["q"], s2=arrays["s2"])
    return Field(grid=grid, cons=cons, t=float(header["t"]))


def save_checkpoint(path, f: Field) -> None:
    _save_container(path, f, "checkpoint")


def load_checkpoint(path) -> Field:
    return _load_container(path, expect_kind="checkpoint")


def snapshot_is_small(grid: Grid, limit: int = SMALL_GRID_CELLS) -> bool:
    total = 1
    for c in grid.cells:
        total *= c
    return total <= limit


def _csv_columns(dim: int):
    cols = [_AXES[a] for a in range(dim)]
    cols.append("rho")
    cols += [f"u_{_AXES[a]}" for a in range(dim)]
    cols.append("theta")
    cols += [f"q_{_AXES[a]}" for a in range(dim)]
    cols.append("s2")
    return cols


def write_snapshot(path_base: str, f: Field, p: ModelParams) -> str:
    """Write one snapshot, choosing the format by grid size.

    Returns the path actually written: ``path_base + ".csv"`` for small
    grids, ``path_base + ".bin"`` otherwise.
    """
    if not snapshot_is_small(f.grid):
        path = path_base + ".bin"
        _save_container(path, f, "snapshot")
        return path
    path = path_base + ".csv"
    g = f.grid
    prim = f.primitive(p)
    mesh = g.center_mesh()
    columns = [np.asarray(mesh[a]).ravel() for a in range(g.dim)]
    columns.append(prim.rho.ravel())
    columns += [prim.u[a].ravel() for a in range(g.dim)]
    columns.append(prim.theta.ravel())
    columns += [prim.q[a].ravel() for a in range(g.dim)]
    columns.append(prim.s2.ravel())
    lines = ["# t = %.17g" % f.t, ",".join(_csv_columns(g.dim))]
    for row in zip(*columns):
        lines.append(",".join("%.17g" % v for v in row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def load_snapshot(path, grid: Grid, p: ModelParams) -> Field:
    """Rebuild a field from a snapshot file (either format).

    The binary format restores the conserved state bit for bit.  The CSV
    format parses the written primitives exactly but rebuilds the conserved
    state from them, so the temperature recovered from the result can differ
    from the original run in its last bit.
    """
    path = str(path)
    if path.endswith(".bin"):
        f = _load_container(path, expect_kind="snapshot")
        if f.grid != grid:
            raise ValueError(f"{path}: snapshot grid does not match the "
                             "configured grid")
        return f
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline()
        if not first.startswith("# t ="):
            raise ValueError(f"{path}: missing time comment line")
        t = float(first.split("=", 1)[1])
        header = fh.readline().strip().split(",")
        expected = _csv_columns(grid.dim)
        if header != expected:
            raise ValueError(f"{path}: column mismatch, expected {expected}")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    shape = grid.shape
    ncoord = grid.dim
    if data.shape[0] != int(np.prod(shape)):
        raise ValueError(f"{path}: row count does not match the grid")
    k = ncoord
    rho = data[:, k].reshape(shape); k += 1
    u = np.stack([data[:, k + a].reshape(shape) for a in range(grid.dim)])
    k += grid.dim
    theta = data[:, k].reshape(shape); k += 1
    q = np.stack([data[:, k + a].reshape(shape) for a in range(grid.dim)])
    k += grid.dim
    s2 = data[:, k].reshape(shape)
    prim = PrimitiveState(rho=rho, u=u, theta=theta, q=q, s2=s2)
    return field_from_primitive(grid, prim, p, t=t)


def sanitize_for_json(obj):
    """Recursively convert to plain JSON types; non-finite floats to null."""
    if isinstance(obj, dict):
        return {str(k): sanitize_for_json(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [sanitize_for_json(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return sanitize_for_json(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        val = float(obj)
        return val if np.isfinite(val) else None
    return obj


def write_summary(path, summary: dict) -> None:
    text = json.dumps(sanitize_for_json(summary), indent=2, sort_keys=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text + "\n")


def read_summary(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)
