"""YAML model and experiment files.

Model file::

    kind: GLSM                 # Elastic ExpConvIso GLSM AgingIso AgingPlusExp
    lam0: 1.0                  # FractionalZener SuperposedSum
    mu0: {file: mu.vcgr}       # per-cell field, path relative to this file
    lams: [0.5]
    gammas: [0.05]
    mus: [0.3]
    taus: [0.1]

Aging coefficients (``AgingIso`` keys ``lam``/``mu``, ``AgingPlusExp`` keys
``lam0``/``mu0``) are either numbers or one of::

    {aging: exp, initial: 1.0, final: 0.5, timescale: 0.1}
    {table: lam.csv}                       # two columns t, value
    {table: lam.vcgr, times: [0, 1, 2]}    # one per-cell array per time

Fractional Zener tensors are ``{isotropic: [lam, mu]}``, a 6x6 Kelvin list,
or ``{file: C1.txt}`` with the 21 upper-triangle Kelvin entries.  The
optional ``prony: {nodes: 64, t_range: [tmin, tmax]}`` controls the fit.

Experiment file: see :func:`load_experiment`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import mittag_leffler as ml
from .audit import ConeSpec
from .constitutive import (
    GLSM,
    AgingIso,
    AgingPlusExp,
    AgingTable,
    Elastic,
    ExpAging,
    ExpConvIso,
    FractionalZener,
    SuperposedSum,
)
from .constitutive.bounds import speed_bound_model
from .errors import ConfigError
from .grid import Grid, load_field, read_vcgr
from .kelvin import from_text, isotropic_kelvin
from .wavesim.config import Pulse, SimConfig


def _read_yaml(path):
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"file not found: {path}")
    try:
        data = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML ({exc})") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping at top level")
    return data


class _Ctx:
    def __init__(self, base, grid):
        self.base = Path(base)
        self.grid = grid

    def path(self, p):
        full = self.base / p
        if not full.is_file():
            raise ConfigError(f"referenced file not found: {full}")
        return full


def _scalar(v, ctx, name):
    if isinstance(v, dict) and "file" in v:
        if ctx.grid is None:
            raise ConfigError(f"{name}: per-cell fields need a grid")
        try:
            return load_field(ctx.path(v["file"]), ctx.grid)
        except ValueError as exc:
            raise ConfigError(f"{name}: {exc}") from exc
    try:
        return float(v)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: expected a number or {{file: ...}}, got {v!r}") from exc


def _scalars(v, ctx, name):
    if v is None:
        return []
    if not isinstance(v, list):
        raise ConfigError(f"{name}: expected a list")
    return [_scalar(x, ctx, f"{name}[{i}]") for i, x in enumerate(v)]


def _law(v, ctx, name):
    if not isinstance(v, dict) or "file" in v:
        return _scalar(v, ctx, name)
    if v.get("aging") == "exp":
        return ExpAging(_scalar(v["initial"], ctx, name), _scalar(v["final"], ctx, name), float(v["timescale"]))
    if "table" in v:
        p = ctx.path(v["table"])
        if p.suffix == ".vcgr":
            if "times" not in v:
                raise ConfigError(f"{name}: per-cell aging tables need 'times'")
            return AgingTable(np.asarray(v["times"], dtype=float), read_vcgr(p), ctx.grid)
        tab = np.loadtxt(p, delimiter=",", ndmin=2)
        return AgingTable(tab[:, 0], tab[:, 1])
    raise ConfigError(f"{name}: unknown coefficient law {v!r}")


def _tensor(v, ctx, name):
    if isinstance(v, dict) and "isotropic" in v:
        lam, mu = v["isotropic"]
        return isotropic_kelvin(float(lam), float(mu))
    if isinstance(v, dict) and "file" in v:
        return from_text(ctx.path(v["file"]).read_text()).kelvin
    arr = np.asarray(v, dtype=float)
    if arr.shape != (6, 6):
        raise ConfigError(f"{name}: expected a 6x6 Kelvin matrix")
    return arr


def _need(d, key, kind):
    if key not in d:
        raise ConfigError(f"{kind} model needs '{key}'")
    return d[key]


def model_from_dict(d, base=".", grid=None):
    ctx = _Ctx(base, grid)
    kind = d.get("kind")
    if kind == "Elastic":
        return Elastic(_scalar(_need(d, "lam", kind), ctx, "lam"), _scalar(_need(d, "mu", kind), ctx, "mu"))
    if kind == "ExpConvIso":
        args = [_scalar(_need(d, k, kind), ctx, k) for k in ("lam", "mu")]
        return ExpConvIso(*args, float(_need(d, "gamma", kind)), float(_need(d, "tau", kind)))
    if kind in ("GLSM", "AgingPlusExp"):
        tail = [_scalars(d.get(k), ctx, k) for k in ("lams", "gammas", "mus", "taus")]
        if kind == "GLSM":
            return GLSM(_scalar(_need(d, "lam0", kind), ctx, "lam0"), _scalar(_need(d, "mu0", kind), ctx, "mu0"), *tail)
        return AgingPlusExp(_law(_need(d, "lam0", kind), ctx, "lam0"), _law(_need(d, "mu0", kind), ctx, "mu0"), *tail)
    if kind == "AgingIso":
        return AgingIso(_law(_need(d, "lam", kind), ctx, "lam"), _law(_need(d, "mu", kind), ctx, "mu"))
    if kind == "FractionalZener":
        alpha, a = float(_need(d, "alpha", kind)), float(_need(d, "a", kind))
        p = d.get("prony") or {}
        t_range = tuple(p.get("t_range", (1e-3 * a, 1e3 * a)))
        prony, _ = ml.prony_fit(alpha, a, int(p.get("nodes", 64)), t_range)
        return FractionalZener(alpha, a, _tensor(_need(d, "C1", kind), ctx, "C1"), _tensor(_need(d, "M", kind), ctx, "M"), prony)
    if kind == "SuperposedSum":
        members = [model_from_dict(m, base, grid) for m in _need(d, "members", kind)]
        return SuperposedSum(members, d.get("weights"))
    raise ConfigError(f"unknown model kind {kind!r}")


def load_model(path, grid=None):
    path = Path(path)
    return model_from_dict(_read_yaml(path), path.parent, grid)


def grid_from_dict(d):
    try:
        if "n" in d:
            return Grid.square(int(d["n"]), float(d.get("length", 1.0)))
        return Grid(int(d["nx"]), int(d["ny"]), float(d["dx"]), float(d["dy"]), tuple(d.get("origin", (0.0, 0.0))))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad grid spec {d!r}: {exc}") from exc


@dataclass
class Experiment:
    """Everything a CLI command needs, resolved from one YAML file."""

    sim: SimConfig
    seed: int = 0
    cones: list = field(default_factory=list)
    empty_cones: list = field(default_factory=list)
    front: tuple | None = None
    threshold: float = 1e-3
    compact: bool = False
    source: dict = field(default_factory=dict)

    @property
    def speed_bound(self):
        s = self.sim
        return speed_bound_model(s.model, s.grid, s.t_end, s.rho)


def _cone(d, c_bound):
    c = d.get("c", "bound")
    if c == "bound":
        c = c_bound
    elif isinstance(c, dict) and "scale" in c:
        c = float(c["scale"]) * c_bound
    try:
        return ConeSpec(tuple(float(v) for v in d["x0"]), float(d["R"]), float(c), tuple(d.get("s_samples", ())))
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"bad cone spec {d!r}: {exc}") from exc


def load_experiment(path):
    """Read an experiment file.

    Keys: ``model`` (path or inline mapping), ``grid`` (``{n, length}`` or
    ``{nx, ny, dx, dy}``), ``rho`` (number or ``{file}``), ``t_end``, ``dt``,
    ``cfl``, ``boundary``, ``stride``, ``pulses`` (list of pulse mappings),
    ``cones`` and ``empty_cones`` (``{x0, R, c}`` with ``c`` a number,
    ``bound`` or ``{scale: f}``), ``front`` (``{x0, threshold}``),
    ``snapshots`` (``full`` or ``energy``) and ``seed``.
    """
    path = Path(path)
    d = _read_yaml(path)
    base = path.parent
    grid = grid_from_dict(_need(d, "grid", "experiment"))
    m = _need(d, "model", "experiment")
    model = model_from_dict(m, base, grid) if isinstance(m, dict) else load_model(base / m, grid)
    rho = _scalar(d.get("rho", 1.0), _Ctx(base, grid), "rho")
    pulses = []
    for p in d.get("pulses", []):
        try:
            pulses.append(Pulse(**{k: tuple(v) if isinstance(v, list) else v for k, v in p.items()}))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad pulse spec {p!r}: {exc}") from exc
    try:
        sim = SimConfig(
            grid, model, rho,
            t_end=float(d.get("t_end", 0.1)),
            dt=d.get("dt", "auto"),
            cfl=float(d.get("cfl", 0.45)),
            pulses=pulses,
            boundary=d.get("boundary", "clamped"),
            stride=int(d.get("stride", 10)),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    exp = Experiment(sim, seed=int(d.get("seed", 0)), source=d)
    c_bound = exp.speed_bound
    exp.cones = [_cone(c, c_bound) for c in d.get("cones", [])]
    exp.empty_cones = [_cone(c, c_bound) for c in d.get("empty_cones", [])]
    if "front" in d:
        exp.front = tuple(float(v) for v in d["front"]["x0"])
        exp.threshold = float(d["front"].get("threshold", 1e-3))
    exp.compact = d.get("snapshots", "full") == "energy"
    return exp
