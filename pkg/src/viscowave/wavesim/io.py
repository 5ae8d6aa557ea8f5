"""Snapshot files: one VCGR file per snapshot plus ``manifest.csv``.

Every array is zero-padded to the corner shape ``(ny+1, nx+1)`` so that one
VCGR file can hold fields from all staggered locations.  Field order::

    vx vy exx eyy gxy sxx syy sxy  es_n es_s ed_n ed_s  [xi_n0_k xi_n1_k xi_s_k for each branch]

The four memory-energy fields are always present; per-branch memory
variables are stored only for full (non-compact) snapshots.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from ..errors import InsufficientSnapshots
from ..grid import read_vcgr, write_vcgr
from .solver import Snapshot

BASE_FIELDS = ("vx", "vy", "exx", "eyy", "gxy", "sxx", "syy", "sxy")
MEMORY_FIELDS = ("es_n", "es_s", "ed_n", "ed_s")
MANIFEST = "manifest.csv"


def _shapes(ny, nx):
    c, k = (ny, nx), (ny + 1, nx + 1)
    return {
        "vx": (ny, nx + 1), "vy": (ny + 1, nx), "exx": c, "eyy": c, "gxy": k, "sxx": c, "syy": c, "sxy": k,
        "es_n": c, "es_s": k, "ed_n": c, "ed_s": k,
    }


def _pad(a, ny, nx):
    out = np.zeros((ny + 1, nx + 1))
    out[: a.shape[0], : a.shape[1]] = a
    return out


def write_snapshot(path, snap: Snapshot, medium):
    ny, nx = snap.exx.shape
    full = snap.xi_n is not None
    mem = snap.compact(medium).memory if full else snap.memory
    arrays = [_pad(getattr(snap, f), ny, nx) for f in BASE_FIELDS]
    arrays += [_pad(mem[f], ny, nx) for f in MEMORY_FIELDS]
    if full:
        for k in range(snap.xi_n.shape[0]):
            arrays += [_pad(snap.xi_n[k, 0], ny, nx), _pad(snap.xi_n[k, 1], ny, nx), snap.xi_s[k]]
    write_vcgr(path, arrays)
    return full


def read_snapshot(path, t, step, n_branches, full):
    data = read_vcgr(path)
    ny, nx = data.shape[1] - 1, data.shape[2] - 1
    shapes = _shapes(ny, nx)
    names = BASE_FIELDS + MEMORY_FIELDS
    vals = {f: data[i][: shapes[f][0], : shapes[f][1]].copy() for i, f in enumerate(names)}
    mem = {"n_branches": n_branches, **{f: vals[f] for f in MEMORY_FIELDS}}
    base = [vals[f] for f in BASE_FIELDS]
    if not full:
        return Snapshot(t, step, *base, None, None, mem)
    rest = data[len(names):]
    if rest.shape[0] != 3 * n_branches:
        raise ValueError(f"{path}: expected {3 * n_branches} memory arrays, found {rest.shape[0]}")
    xi_n = np.stack([rest[0::3, :ny, :nx], rest[1::3, :ny, :nx]], axis=1)
    xi_s = rest[2::3].copy()
    return Snapshot(t, step, *base, xi_n, xi_s)


def write_run(out_dir, snapshots, medium, compact=False):
    """Write snapshots (any iterable, consumed lazily) and the manifest; returns the count."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for i, snap in enumerate(snapshots):
        name = f"snap_{i:05d}.vcgr"
        if compact:
            snap = snap.compact(medium)
        full = write_snapshot(out / name, snap, medium)
        rows.append((i, repr(float(snap.t)), snap.step, name, medium.n_branches, "full" if full else "energy"))
    with open(out / MANIFEST, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "t", "step", "file", "n_branches", "memory"])
        w.writerows(rows)
    return len(rows)


def read_manifest(run_dir):
    path = Path(run_dir) / MANIFEST
    if not path.is_file():
        raise InsufficientSnapshots(f"no {MANIFEST} in {run_dir}")
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise InsufficientSnapshots(f"{run_dir} lists no snapshots")
    return rows


def iter_run(run_dir):
    """Snapshots of a written run, loaded one at a time."""
    run_dir = Path(run_dir)
    for row in read_manifest(run_dir):
        yield read_snapshot(
            run_dir / row["file"], float(row["t"]), int(row["step"]), int(row["n_branches"]), row["memory"] == "full"
        )


def load_run(run_dir):
    return list(iter_run(run_dir))
