"""Energy bookkeeping on solver snapshots.

All densities are returned at cell centres.  Face kinetic energies are
averaged onto centres with weight 1/2 per face, corner (shear) energies with
weight 1/4 per corner, so whole-grid sums equal the solver's discrete energy.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConeOutsideGrid, InsufficientSnapshots, ModelMismatch, NoFrontDetected
from .wavesim.solver import Medium, Snapshot

SUBSAMPLE = 8


def _faces_to_centres(vx2, vy2):
    return 0.5 * (vx2[:, :-1] + vx2[:, 1:]) + 0.5 * (vy2[:-1, :] + vy2[1:, :])


def _corners_to_centres(c):
    return 0.25 * (c[:-1, :-1] + c[:-1, 1:] + c[1:, :-1] + c[1:, 1:])


def _quad2(m, a, b):
    c00, c01, c11 = m
    return c00 * a * a + 2.0 * c01 * a * b + c11 * b * b


def _check(snap: Snapshot, medium: Medium):
    ny, nx = medium.grid.shape
    nb = medium.n_branches
    if snap.xi_n is None:
        ok = snap.exx.shape == (ny, nx) and snap.memory is not None and snap.memory["n_branches"] == nb
        got = snap.memory["n_branches"] if snap.memory is not None else "?"
    else:
        ok = snap.exx.shape == (ny, nx) and snap.xi_n.shape == (nb, 2, ny, nx) and snap.xi_s.shape == (nb, ny + 1, nx + 1)
        got = snap.xi_n.shape[0]
    if not ok:
        raise ModelMismatch(
            f"snapshot with {got} branches on {snap.exx.shape} does not match model with {nb} branches on {(ny, nx)}"
        )


def memory_energies(xi_n, xi_s, medium: Medium):
    """Branch-summed stored and dissipation densities of the memory variables.

    Returns ``(es_n, es_s, ed_n, ed_s)``: centre and corner parts of
    ``sum 1/2 xi.K^+ xi`` and ``sum xi.K^+ xi / theta``.
    """
    ny, nx = medium.grid.shape
    es_n, ed_n = np.zeros((ny, nx)), np.zeros((ny, nx))
    es_s, ed_s = np.zeros((ny + 1, nx + 1)), np.zeros((ny + 1, nx + 1))
    for k, b in enumerate(medium.branches):
        qn = _quad2(b["n_pinv"], xi_n[k, 0], xi_n[k, 1])
        qs = b["s_inv"] * xi_s[k] ** 2
        es_n += 0.5 * qn
        es_s += 0.5 * qs
        ed_n += qn / b["theta_n"]
        ed_s += qs / np.where(b["theta_s"] > 0, b["theta_s"], 1.0)
    return es_n, es_s, ed_n, ed_s


def energy_fields(snap: Snapshot, medium: Medium):
    """Kinetic, stored and dissipation-rate densities ``(e_K, e_S, e_D_rate)``."""
    _check(snap, medium)
    e_k = _faces_to_centres(0.5 * medium.rho_vx * snap.vx**2, 0.5 * medium.rho_vy * snap.vy**2)
    eq = medium.equilibrium(snap.t)
    eqd = medium.equilibrium_rate(snap.t)
    if snap.xi_n is None:
        m = snap.memory
        mem = (m["es_n"], m["es_s"], m["ed_n"], m["ed_s"])
    else:
        mem = memory_energies(snap.xi_n, snap.xi_s, medium)
    es_n = 0.5 * _quad2(eq["n"], snap.exx, snap.eyy) + mem[0]
    es_s = 0.5 * eq["s"] * snap.gxy**2 + mem[1]
    ed_n = -0.5 * _quad2(eqd["n"], snap.exx, snap.eyy) + mem[2]
    ed_s = -0.5 * eqd["s"] * snap.gxy**2 + mem[3]
    return e_k, es_n + _corners_to_centres(es_s), ed_n + _corners_to_centres(ed_s)


def total_energy(snap: Snapshot, medium: Medium):
    """Whole-grid ``int (e_K + e_S) dx``."""
    e_k, e_s, _ = energy_fields(snap, medium)
    return float(np.sum(e_k + e_s) * medium.grid.cell_area)


def leapfrog_energy(state, vx_next, vy_next, medium: Medium):
    """Discrete energy conserved exactly by the elastic leapfrog scheme.

    Kinetic part ``1/2 rho v^{n-1/2} . v^{n+1/2}`` plus the stored energy at
    step ``n``.  Used by the stability sentinel, since the time-centred
    average of the velocities oscillates at ``O(dt^2)`` even without drift.
    """
    e_k = _faces_to_centres(0.5 * medium.rho_vx * state.vx * vx_next, 0.5 * medium.rho_vy * state.vy * vy_next)
    _, e_s, _ = energy_fields(state, medium)
    return float(np.sum(e_k + e_s) * medium.grid.cell_area)


def centre_fields(snap: Snapshot):
    """Velocity and in-plane stress averaged to cell centres: ``(vx, vy, sxx, syy, sxy)``."""
    vx = 0.5 * (snap.vx[:, :-1] + snap.vx[:, 1:])
    vy = 0.5 * (snap.vy[:-1, :] + snap.vy[1:, :])
    return vx, vy, snap.sxx, snap.syy, _corners_to_centres(snap.sxy)


# --------------------------------------------------------------------------
# cones


@dataclass(frozen=True)
class ConeSpec:
    """Shrinking balls ``B(x0, R - c s)`` sampled at times ``s_samples``."""

    x0: tuple[float, float]
    R: float
    c: float
    s_samples: tuple = ()

    def __post_init__(self):
        if not (self.R > 0 and self.c > 0):
            raise ValueError("cone radius and speed must be positive")
        s = np.asarray(self.s_samples, dtype=float)
        if s.size and (np.any(np.diff(s) <= 0) or s[0] < 0 or s[-1] >= self.R / self.c):
            raise ValueError("cone samples must be ascending in [0, R/c)")
        object.__setattr__(self, "s_samples", tuple(float(v) for v in s))

    def radius(self, s):
        return self.R - self.c * s

    def default_samples(self, times):
        return tuple(float(t) for t in times if t < self.R / self.c)


def ball_weights(grid, x0, r):
    """Covered-area fraction of each cell by the disc ``|x - x0| < r`` (8x8 subsampling)."""
    w = np.zeros(grid.shape)
    if r <= 0:
        return w
    ox, oy = grid.origin
    i0 = max(int(np.floor((x0[0] - r - ox) / grid.dx)), 0)
    i1 = min(int(np.ceil((x0[0] + r - ox) / grid.dx)), grid.nx)
    j0 = max(int(np.floor((x0[1] - r - oy) / grid.dy)), 0)
    j1 = min(int(np.ceil((x0[1] + r - oy) / grid.dy)), grid.ny)
    if i1 <= i0 or j1 <= j0:
        return w
    sub = (np.arange(SUBSAMPLE) + 0.5) / SUBSAMPLE
    xs = ox + (np.arange(i0, i1)[:, None] + sub[None, :]) * grid.dx
    ys = oy + (np.arange(j0, j1)[:, None] + sub[None, :]) * grid.dy
    dx2 = (xs - x0[0]) ** 2
    dy2 = (ys - x0[1]) ** 2
    inside = dy2[:, None, :, None] + dx2[None, :, None, :] < r * r
    w[j0:j1, i0:i1] = inside.mean(axis=(2, 3))
    return w


def _check_cone(grid, cone, margin=2):
    x_lo, x_hi, y_lo, y_hi = grid.extent
    mx, my = margin * grid.dx, margin * grid.dy
    x, y = cone.x0
    if x - cone.R < x_lo + mx or x + cone.R > x_hi - mx or y - cone.R < y_lo + my or y + cone.R > y_hi - my:
        raise ConeOutsideGrid(f"cone of radius {cone.R} at {cone.x0} needs a {margin}-cell margin inside the grid")


def _nearest(snapshots, s):
    times = np.array([sn.t for sn in snapshots])
    return snapshots[int(np.argmin(np.abs(times - s)))]


def cone_energy(snapshots, medium: Medium, cone: ConeSpec):
    """``e(s) = int_{B(x0, R - c s)} (e_K + e_S) dx`` for every cone sample.

    Each sample uses the snapshot closest in time; without explicit samples
    every snapshot inside ``[0, R/c)`` is used.  Returns ``(s, e)`` arrays.
    """
    _check_cone(medium.grid, cone)
    s_list = cone.s_samples or cone.default_samples([sn.t for sn in snapshots])
    out_s, out_e = [], []
    for s in s_list:
        snap = _nearest(snapshots, s)
        e_k, e_s, _ = energy_fields(snap, medium)
        w = ball_weights(medium.grid, cone.x0, cone.radius(snap.t))
        out_s.append(snap.t)
        out_e.append(float(np.sum(w * (e_k + e_s)) * medium.grid.cell_area))
    return np.array(out_s), np.array(out_e)


def monotonicity_violation(e, floor=0.0):
    """Largest increase ``max_{i<j} e_j - e_i`` and whether it is within ``1e-3 e(0) + floor``."""
    e = np.asarray(e, dtype=float)
    if e.size < 2:
        return 0.0, True
    rise = float(np.max(e - np.minimum.accumulate(e)))
    return rise, bool(rise <= 1e-3 * e[0] + floor)


def lateral_integrand(snapshots, medium: Medium, cone: ConeSpec, n_angles=64):
    """Minimum over lateral-surface samples of ``e_K + e_S - (sigma v).n / c``.

    Values are taken at the cell centre containing each sample point, with
    ``n`` the outward radial unit vector.  Also returns the energy scale used
    to normalize the tolerance.
    """
    g = medium.grid
    theta = 2.0 * np.pi * np.arange(n_angles) / n_angles
    s_list = cone.s_samples or cone.default_samples([sn.t for sn in snapshots])
    worst, scale = np.inf, 0.0
    for s in s_list:
        snap = _nearest(snapshots, s)
        e_k, e_s, _ = energy_fields(snap, medium)
        vx, vy, sxx, syy, sxy = centre_fields(snap)
        r = cone.radius(snap.t)
        scale = max(scale, float(np.max(e_k + e_s)))
        for th in theta:
            nx_, ny_ = np.cos(th), np.sin(th)
            iy, ix = g.cell_index((cone.x0[0] + r * nx_, cone.x0[1] + r * ny_))
            flux = (sxx[iy, ix] * vx[iy, ix] + sxy[iy, ix] * vy[iy, ix]) * nx_ + (
                sxy[iy, ix] * vx[iy, ix] + syy[iy, ix] * vy[iy, ix]
            ) * ny_
            worst = min(worst, float(e_k[iy, ix] + e_s[iy, ix] - flux / cone.c))
    return worst, scale


# --------------------------------------------------------------------------
# front speed


@dataclass
class FrontFit:
    speed: float
    intercept: float
    r2: float
    n_bins: int
    radii: np.ndarray
    arrivals: np.ndarray


def front_speed(snapshots, threshold_rel=1e-3, x0=(0.5, 0.5), grid=None, r_min=None, r_max=None):
    """Least-squares slope of radius against first-arrival time.

    Cells are binned by distance to ``x0`` (bin width ``max(dx, dy)``).  A
    bin's arrival time is the first snapshot time where its largest ``|v|``
    exceeds ``threshold_rel`` times the largest ``|v|`` over all snapshots.
    Bins already above threshold in the first snapshot are excluded.
    """
    if not 0 < threshold_rel < 1:
        raise ValueError("threshold_rel must lie in (0, 1)")
    if grid is None:
        raise ValueError("front_speed needs the grid")
    X, Y = grid.centers()
    dist = np.hypot(X - x0[0], Y - x0[1])
    h = max(grid.dx, grid.dy)
    bins = np.floor(dist / h).astype(int)
    r_lo = 0.0 if r_min is None else r_min
    r_hi = dist.max() if r_max is None else r_max
    n_bins = int(bins.max()) + 1
    speeds = []
    peak_per_bin = []
    for snap in snapshots:
        vx, vy, *_ = centre_fields(snap)
        speedfield = np.hypot(vx, vy)
        speeds.append(float(speedfield.max()))
        pk = np.zeros(n_bins)
        np.maximum.at(pk, bins.ravel(), speedfield.ravel())
        peak_per_bin.append(pk)
    vmax = max(speeds) if speeds else 0.0
    if vmax == 0.0:
        raise NoFrontDetected("velocity field is identically zero")
    peaks = np.array(peak_per_bin)
    times = np.array([sn.t for sn in snapshots])
    above = peaks > threshold_rel * vmax
    radii, arrivals = [], []
    for b in range(n_bins):
        r = (b + 0.5) * h
        if r < r_lo or r > r_hi or above[0, b] or not above[:, b].any():
            continue
        radii.append(r)
        arrivals.append(times[int(np.argmax(above[:, b]))])
    if len(radii) < 3:
        raise NoFrontDetected(f"threshold crossed in only {len(radii)} radius bins")
    radii, arrivals = np.array(radii), np.array(arrivals)
    if np.ptp(arrivals) == 0:
        raise NoFrontDetected("all bins crossed threshold at the same time")
    slope, icpt = np.polyfit(arrivals, radii, 1)
    pred = slope * arrivals + icpt
    ss_res = float(np.sum((radii - pred) ** 2))
    ss_tot = float(np.sum((radii - radii.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    return FrontFit(float(slope), float(icpt), r2, len(radii), radii, arrivals)


# --------------------------------------------------------------------------
# pointwise work-density decomposition


def _divergence(fx, fy, dx, dy):
    return (fx[1:-1, 2:] - fx[1:-1, :-2]) / (2 * dx) + (fy[2:, 1:-1] - fy[:-2, 1:-1]) / (2 * dy)


def regular_snapshots(snapshots):
    """The snapshots whose step counts are multiples of the first spacing."""
    if len(snapshots) < 2:
        return list(snapshots)
    d = snapshots[1].step - snapshots[0].step
    if d <= 0:
        return list(snapshots[:1])
    return [sn for sn in snapshots if (sn.step - snapshots[0].step) % d == 0]


def decomposition_audit(snapshots, medium: Medium, border=2):
    """``int |div(sigma v) - (de_K/dt + de_S/dt + e_D_rate)| dx`` at interior snapshots.

    Needs at least three equally spaced snapshots; time derivatives are
    centred differences, the divergence is the centred difference of the
    cell-centre flux.  ``border`` cells next to the walls are excluded.
    Returns ``(times, residuals)``.
    """
    if len(snapshots) < 3:
        raise InsufficientSnapshots("decomposition audit needs at least 3 snapshots")
    times = np.array([sn.t for sn in snapshots])
    steps = np.diff(times)
    if np.ptp(steps) > 1e-9 * steps.max():
        raise InsufficientSnapshots("decomposition audit needs equally spaced snapshots")
    g = medium.grid
    fields = [energy_fields(sn, medium) for sn in snapshots]
    inner = (slice(border, -border), slice(border, -border))
    out_t, out_r = [], []
    for i in range(1, len(snapshots) - 1):
        dt2 = times[i + 1] - times[i - 1]
        de = ((fields[i + 1][0] + fields[i + 1][1]) - (fields[i - 1][0] + fields[i - 1][1])) / dt2
        vx, vy, sxx, syy, sxy = centre_fields(snapshots[i])
        div = np.zeros(g.shape)
        div[1:-1, 1:-1] = _divergence(sxx * vx + sxy * vy, sxy * vx + syy * vy, g.dx, g.dy)
        res = div - de - fields[i][2]
        out_t.append(times[i])
        out_r.append(float(np.sum(np.abs(res[inner])) * g.cell_area))
    return np.array(out_t), np.array(out_r)


# --------------------------------------------------------------------------
# report


@dataclass
class EnergyReport:
    times: np.ndarray
    e_K: np.ndarray
    e_S: np.ndarray
    e_D_rate: np.ndarray
    cone: dict = field(default_factory=dict)
    residual: np.ndarray | None = None
    front: FrontFit | None = None
    certificates: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    @property
    def passed(self):
        return all(c["pass"] for c in self.certificates.values())


def energy_totals(snapshots, medium: Medium):
    a = medium.grid.cell_area
    rows = []
    for sn in snapshots:
        e_k, e_s, e_d = energy_fields(sn, medium)
        rows.append((sn.t, float(np.sum(e_k)) * a, float(np.sum(e_s)) * a, float(np.sum(e_d)) * a))
    arr = np.array(rows).reshape(-1, 4)
    return arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3]


def audit(snapshots, medium: Medium, cones=(), c_bound=None, front=None, zero_in_ball=(), threshold_rel=1e-3):
    """Run every certificate that the inputs allow and collect an :class:`EnergyReport`.

    ``cones`` are checked for monotonicity and lateral-integrand sign;
    ``zero_in_ball`` lists cones whose balls carry no initial data and must
    stay (numerically) empty; ``front`` is the pulse centre for the speed fit.
    """
    t, ek, es, ed = energy_totals(snapshots, medium)
    total = ek + es
    e_total = float(total[0]) if total.size else 0.0
    rep = EnergyReport(t, ek, es, ed)
    finite = bool(np.all(np.isfinite(total)))
    rep.certificates["energy_finite"] = {"pass": finite and bool(np.all(ek >= 0) and np.all(es >= -1e-14 * max(e_total, 1e-300)))}
    if total.size > 1:
        growth = float(np.max(total) / max(total[0], 1e-300))
        rep.certificates["energy_bounded"] = {"pass": growth <= 1.01, "max_over_initial": growth}
    floor = 1e-6 * e_total
    for i, cone in enumerate(cones):
        s, e = cone_energy(snapshots, medium, cone)
        rise, ok = monotonicity_violation(e, floor)
        rep.cone[f"cone{i}"] = (s, e)
        rep.certificates[f"cone{i}_monotone"] = {"pass": ok, "max_rise": rise, "e0": float(e[0]) if e.size else 0.0}
        worst, scale = lateral_integrand(snapshots, medium, cone)
        rep.certificates[f"cone{i}_lateral"] = {"pass": worst >= -1e-12 * max(scale, 1e-300), "min": worst}
        if c_bound is not None and cone.c < c_bound:
            rep.notes.append(f"cone{i} speed {cone.c:.6g} is below the model bound {c_bound:.6g}")
    for i, cone in enumerate(zero_in_ball):
        s, e = cone_energy(snapshots, medium, cone)
        ratio = float(np.max(e) / e_total) if e_total > 0 else 0.0
        rep.cone[f"empty{i}"] = (s, e)
        rep.certificates[f"empty{i}_stays_empty"] = {"pass": ratio <= 1e-6, "max_ratio": ratio}
        rise, ok = monotonicity_violation(e, floor)
        rep.certificates[f"empty{i}_monotone"] = {"pass": ok, "max_rise": rise}
    if front is not None and c_bound is not None:
        try:
            fit = front_speed(snapshots, threshold_rel, front, medium.grid)
            rep.front = fit
            rep.certificates["front_speed"] = {
                "pass": fit.speed <= 1.05 * c_bound and fit.r2 >= 0.99,
                "speed": fit.speed,
                "bound": c_bound,
                "r2": fit.r2,
                "bins": fit.n_bins,
            }
        except NoFrontDetected as exc:
            rep.certificates["front_speed"] = {"pass": False, "error": str(exc)}
    regular = regular_snapshots(snapshots)
    if len(regular) >= 3:
        rt, rr = decomposition_audit(regular, medium)
        rep.residual = np.full(len(snapshots), np.nan)
        index = {sn.step: i for i, sn in enumerate(snapshots)}
        for sn, r in zip(regular[1:-1], rr):
            rep.residual[index[sn.step]] = r
        rep.notes.append(f"max decomposition residual {float(np.max(rr)):.3e}")
    return rep


def _fmt(x):
    return repr(float(x))


def write_report(rep: EnergyReport, out_dir):
    """Write ``report.csv`` (one row per snapshot) and ``summary.json``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cone_keys = sorted(rep.cone)
    with open(out / "report.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "e_K", "e_S", "eD_rate"] + [f"{k}_e" for k in cone_keys] + ["residual"])
        for i, t in enumerate(rep.times):
            row = [_fmt(t), _fmt(rep.e_K[i]), _fmt(rep.e_S[i]), _fmt(rep.e_D_rate[i])]
            for k in cone_keys:
                s, e = rep.cone[k]
                hit = np.nonzero(np.isclose(s, t, rtol=0, atol=1e-12 * max(1.0, abs(t))))[0]
                row.append(_fmt(e[hit[0]]) if hit.size else "")
            res = rep.residual[i] if rep.residual is not None else np.nan
            row.append("" if np.isnan(res) else _fmt(res))
            w.writerow(row)

    def clean(v):
        if isinstance(v, (np.floating, float)):
            return float(v)
        if isinstance(v, (np.integer,)):
            return int(v)
        if isinstance(v, (np.bool_,)):
            return bool(v)
        if isinstance(v, dict):
            return {k: clean(x) for k, x in v.items()}
        return v

    summary = {
        "passed": rep.passed,
        "certificates": {k: clean(v) for k, v in sorted(rep.certificates.items())},
        "notes": rep.notes,
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return out / "report.csv", out / "summary.json"
