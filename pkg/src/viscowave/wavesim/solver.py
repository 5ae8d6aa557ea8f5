"""2D plane-strain velocity-stress solver on a staggered grid.

Layout (row index j along y, column index i along x)::

    vx   (ny, nx+1)    vertical faces      (i dx, (j+1/2) dy)
    vy   (ny+1, nx)    horizontal faces    ((i+1/2) dx, j dy)
    exx, eyy, sxx, syy (ny, nx) cell centres
    gxy, sxy (ny+1, nx+1) cell corners

``gxy`` is the Kelvin shear strain ``sqrt2 * eps_xy``; ``sxy`` is the
physical shear stress.  Memory variables ``xi`` are stress-valued:
``xi_k = K_k int exp(-(t-s)/theta_k) eps_s ds``, normal pairs at centres and
shear values at corners.

Leapfrog: velocities live at half steps, strains/stresses at whole steps.
Each step does ``v += dt/rho div(sigma)``, then advances strain and the
memory variables exactly for the (constant) strain rate of the step and
reassembles ``sigma = C_eq(t) eps + sum_k xi_k``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..constitutive.bounds import speed_bound_model
from ..constitutive.response import exp_segment
from ..errors import UnsupportedKind, Unstable
from .config import SimConfig

SQRT2 = np.sqrt(2.0)
_ORTHO_TOL = 1e-12


def _cells(arr, grid):
    """Broadcast a (6,6)- or (ny,nx,6,6)-valued Kelvin field to cells."""
    arr = np.asarray(arr, dtype=float)
    return np.broadcast_to(arr, grid.shape + (6, 6))


def _cell_scalar(v, grid):
    return np.broadcast_to(np.asarray(v, dtype=float), grid.shape)


def _check_inplane(k):
    scale = max(1.0, float(np.max(np.abs(k))))
    if np.max(np.abs(k[..., [0, 1], 5])) > _ORTHO_TOL * scale:
        raise UnsupportedKind("solver needs tensors without in-plane normal/shear coupling")


def corner_harmonic(v):
    """Harmonic mean of the (up to four) cells around each corner; 0 if any is 0."""
    ny, nx = v.shape
    pad = np.full((ny + 2, nx + 2), np.nan)
    pad[1:-1, 1:-1] = v
    quads = np.stack([pad[:-1, :-1], pad[:-1, 1:], pad[1:, :-1], pad[1:, 1:]])
    valid = ~np.isnan(quads)
    count = valid.sum(axis=0)
    with np.errstate(divide="ignore"):
        inv = np.where(valid, 1.0 / np.where(valid, quads, 1.0), 0.0)
    has_zero = np.any(valid & (np.where(valid, quads, 1.0) == 0), axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = count / inv.sum(axis=0)
    return np.where(has_zero, 0.0, out)


def _compact(a):
    """Collapse a spatially uniform array to a 0-d array (keeps broadcasting cheap)."""
    a = np.asarray(a, dtype=float)
    if a.ndim and np.all(a == a.flat[0]):
        return np.array(a.flat[0])
    return np.array(a)


def _stack(arrs):
    """Stack per-branch arrays along a new leading axis, broadcast to a common shape."""
    arrs = np.broadcast_arrays(*arrs)
    out = np.stack(arrs)
    return out.reshape(out.shape + (1,) * (3 - out.ndim))


def _pinv2(c00, c01, c11):
    """Pseudo-inverse of symmetric PSD 2x2 blocks, entrywise arrays."""
    det = c00 * c11 - c01 * c01
    tr = c00 + c11
    scale = np.maximum(np.abs(tr), 1e-300)
    regular = det > 1e-12 * scale * scale
    with np.errstate(divide="ignore", invalid="ignore"):
        i00 = np.where(regular, c11 / det, c00 / (tr * tr))
        i01 = np.where(regular, -c01 / det, c01 / (tr * tr))
        i11 = np.where(regular, c00 / det, c11 / (tr * tr))
    zero = tr <= 0
    return tuple(np.where(zero, 0.0, x) for x in (i00, i01, i11))


class Medium:
    """Per-cell and per-corner material data of a configuration."""

    def __init__(self, config: SimConfig):
        model, grid = config.model, config.grid
        if not model.has_branch_form:
            raise UnsupportedKind(f"{model.kind} cannot be time-stepped (no exponential branch form)")
        self.grid, self.model = grid, model
        self.boundary = config.boundary
        rho = config.rho_cells()
        self.rho = rho
        ny, nx = grid.shape
        rvx = np.empty((ny, nx + 1))
        rvx[:, 1:-1] = 0.5 * (rho[:, 1:] + rho[:, :-1])
        rvx[:, 0], rvx[:, -1] = rho[:, 0], rho[:, -1]
        rvy = np.empty((ny + 1, nx))
        rvy[1:-1, :] = 0.5 * (rho[1:, :] + rho[:-1, :])
        rvy[0, :], rvy[-1, :] = rho[0, :], rho[-1, :]
        self.rho_vx, self.rho_vy = rvx, rvy

        self.aging = bool(model.aging)
        self._eq_cache = None
        self.eq = self.equilibrium(0.0)
        self.branches = []
        for k, theta in model.branches(grid):
            kc = _cells(k, grid)
            _check_inplane(kc)
            th = _cell_scalar(theta, grid)
            n = tuple(_compact(kc[..., i, j]) for i, j in ((0, 0), (0, 1), (1, 1)))
            ks = _compact(corner_harmonic(kc[..., 5, 5]))
            ths = _compact(corner_harmonic(th))
            self.branches.append(
                {
                    "n": n,
                    "n_pinv": tuple(_compact(x) for x in _pinv2(*n)),
                    "theta_n": _compact(th),
                    "s": ks,
                    "s_inv": np.where(ks > 0, 1.0 / np.where(ks > 0, ks, 1.0), 0.0),
                    "theta_s": ths,
                }
            )

    @property
    def n_branches(self):
        return len(self.branches)

    def _eq_from(self, c):
        _check_inplane(c)
        n = (np.array(c[..., 0, 0]), np.array(c[..., 0, 1]), np.array(c[..., 1, 1]))
        return {"n": n, "s": corner_harmonic(c[..., 5, 5])}

    def equilibrium(self, t):
        if not self.aging and self._eq_cache is not None:
            return self._eq_cache
        eq = self._eq_from(_cells(self.model.equilibrium(t, self.grid), self.grid))
        if not self.aging:
            self._eq_cache = eq
        return eq

    def equilibrium_rate(self, t):
        """Time derivative of :meth:`equilibrium` (corner values differentiate the harmonic mean)."""
        g = self.grid
        if not self.aging:
            z = np.zeros(g.shape)
            return {"n": (z, z, z), "s": np.zeros((g.ny + 1, g.nx + 1))}
        c = _cells(self.model.equilibrium(t, g), g)
        cd = _cells(self.model.equilibrium_rate(t, g), g)
        _check_inplane(cd)
        n = (np.array(cd[..., 0, 0]), np.array(cd[..., 0, 1]), np.array(cd[..., 1, 1]))
        c55, d55 = c[..., 5, 5], cd[..., 5, 5]
        h = corner_harmonic(c55)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(c55 > 0, d55 / np.where(c55 > 0, c55, 1.0) ** 2, 0.0)
        ny, nx = g.shape
        pad = np.zeros((ny + 2, nx + 2))
        pad[1:-1, 1:-1] = ratio
        cnt = np.zeros((ny + 2, nx + 2))
        cnt[1:-1, 1:-1] = 1.0
        quad = lambda a: a[:-1, :-1] + a[:-1, 1:] + a[1:, :-1] + a[1:, 1:]
        return {"n": n, "s": h * h * quad(pad) / quad(cnt)}


@dataclass
class WaveState:
    """Solver state; ``vx, vy`` are at ``t - dt/2``, everything else at ``t``."""

    t: float
    step: int
    vx: np.ndarray
    vy: np.ndarray
    exx: np.ndarray
    eyy: np.ndarray
    gxy: np.ndarray
    sxx: np.ndarray
    syy: np.ndarray
    sxy: np.ndarray
    xi_n: np.ndarray  # (nb, 2, ny, nx)
    xi_s: np.ndarray  # (nb, ny+1, nx+1)


@dataclass
class Snapshot:
    """Time-aligned fields at ``t`` (velocity averaged over the two half steps)."""

    t: float
    step: int
    vx: np.ndarray
    vy: np.ndarray
    exx: np.ndarray
    eyy: np.ndarray
    gxy: np.ndarray
    sxx: np.ndarray
    syy: np.ndarray
    sxy: np.ndarray
    xi_n: np.ndarray | None
    xi_s: np.ndarray | None
    memory: dict | None = None

    def compact(self, medium):
        """Copy with the memory variables replaced by their summed energy densities."""
        if self.xi_n is None:
            return self
        from ..audit import memory_energies

        es_n, es_s, ed_n, ed_s = memory_energies(self.xi_n, self.xi_s, medium)
        mem = {"n_branches": self.xi_n.shape[0], "es_n": es_n, "es_s": es_s, "ed_n": ed_n, "ed_s": ed_s}
        return Snapshot(
            self.t, self.step, self.vx, self.vy, self.exx, self.eyy, self.gxy,
            self.sxx, self.syy, self.sxy, None, None, mem,
        )


def stable_dt(config: SimConfig):
    """``cfl * min(dx, dy) / c`` with ``c`` the model-specific speed bound over the grid."""
    c = speed_bound_model(config.model, config.grid, config.t_end, config.rho)
    return config.cfl * min(config.grid.dx, config.grid.dy) / c


def time_step(config: SimConfig):
    """Step actually used: the requested (or stable) step shrunk to divide ``t_end``."""
    dt_max = stable_dt(config) if config.dt == "auto" else float(config.dt)
    if config.t_end == 0:
        return dt_max, 0
    n = int(np.ceil(config.t_end / dt_max - 1e-12))
    return config.t_end / n, n


class Solver:
    def __init__(self, config: SimConfig, medium: Medium | None = None):
        self.config = config
        self.grid = config.grid
        self.medium = medium or Medium(config)
        self.dt, self.n_steps = time_step(config)
        br = self.medium.branches
        if br:
            e_n, a_n, b_n = exp_segment(_stack([b["theta_n"] for b in br]), self.dt)
            theta_s = _stack([np.where(b["theta_s"] > 0, b["theta_s"], 1.0) for b in br])
            e_s, a_s, b_s = exp_segment(theta_s, self.dt)
            c_n, c_s = a_n + b_n, a_s + b_s
            self._upd = {
                "E_n": e_n,
                "k00": c_n * _stack([b["n"][0] for b in br]),
                "k01": c_n * _stack([b["n"][1] for b in br]),
                "k11": c_n * _stack([b["n"][2] for b in br]),
                "E_s": e_s,
                "ks": c_s * _stack([b["s"] for b in br]),
            }

    # ------------------------------------------------------------------ setup
    def initial_state(self):
        g = self.grid
        ny, nx = g.shape
        vx = np.zeros((ny, nx + 1))
        vy = np.zeros((ny + 1, nx))
        Xx, Yx = g.xfaces()
        Xy, Yy = g.yfaces()
        for p in self.config.pulses:
            if p.kind == "point":
                iy, _ = g.cell_index(p.center)
                ix = int(np.clip(np.rint((p.center[0] - g.origin[0]) / g.dx), 0, g.nx))
                vx[iy, ix] += p.amplitude
            else:
                vx += p.velocity(Xx, Yx, 0)
                vy += p.velocity(Xy, Yy, 1)
        self._apply_velocity_bc(vx, vy)
        nb = self.medium.n_branches
        zc = np.zeros((ny, nx))
        zk = np.zeros((ny + 1, nx + 1))
        return WaveState(
            0.0, 0, vx, vy, zc.copy(), zc.copy(), zk.copy(), zc.copy(), zc.copy(), zk.copy(),
            np.zeros((nb, 2, ny, nx)), np.zeros((nb, ny + 1, nx + 1)),
        )

    def _apply_velocity_bc(self, vx, vy):
        if self.config.boundary == "clamped":
            vx[:, 0] = vx[:, -1] = 0.0
            vy[0, :] = vy[-1, :] = 0.0

    # --------------------------------------------------------------- kernels
    def accelerations(self, sxx, syy, sxy):
        g = self.grid
        dx, dy = g.dx, g.dy
        ax = np.zeros((g.ny, g.nx + 1))
        ay = np.zeros((g.ny + 1, g.nx))
        ax[:, 1:-1] = (sxx[:, 1:] - sxx[:, :-1]) / dx + (sxy[1:, 1:-1] - sxy[:-1, 1:-1]) / dy
        ay[1:-1, :] = (sxy[1:-1, 1:] - sxy[1:-1, :-1]) / dx + (syy[1:, :] - syy[:-1, :]) / dy
        if self.config.boundary == "free":
            # half cells against traction-free walls; wall shear is zero
            ax[:, 0] = 2.0 * sxx[:, 0] / dx
            ax[:, -1] = -2.0 * sxx[:, -1] / dx
            ay[0, :] = 2.0 * syy[0, :] / dy
            ay[-1, :] = -2.0 * syy[-1, :] / dy
        return ax / self.medium.rho_vx, ay / self.medium.rho_vy

    def strain_rates(self, vx, vy):
        """``(d_xx, d_yy)`` at centres and Kelvin shear rate at corners."""
        g = self.grid
        dx, dy = g.dx, g.dy
        dxx = (vx[:, 1:] - vx[:, :-1]) / dx
        dyy = (vy[1:, :] - vy[:-1, :]) / dy
        gam = np.zeros((g.ny + 1, g.nx + 1))
        dvx_dy = (vx[1:, 1:-1] - vx[:-1, 1:-1]) / dy
        dvy_dx = (vy[1:-1, 1:] - vy[1:-1, :-1]) / dx
        gam[1:-1, 1:-1] = dvx_dy + dvy_dx
        if self.config.boundary == "clamped":
            # mirror ghosts for zero wall velocity: one-sided half-cell differences
            gam[0, 1:-1] = 2.0 * vx[0, 1:-1] / dy
            gam[-1, 1:-1] = -2.0 * vx[-1, 1:-1] / dy
            gam[1:-1, 0] = 2.0 * vy[1:-1, 0] / dx
            gam[1:-1, -1] = -2.0 * vy[1:-1, -1] / dx
        return dxx, dyy, gam / SQRT2

    def _wall_mask_zero(self, arr):
        if self.config.boundary == "free":
            arr[0, :] = arr[-1, :] = 0.0
            arr[:, 0] = arr[:, -1] = 0.0
        return arr

    def advance_memory(self, xi_n, xi_s, rate0, rate1, dt):
        """Exact memory update over one step for a strain rate linear in time.

        ``rate0``/``rate1`` are ``(d_xx, d_yy, g_dot)`` triples at the two ends.
        """
        xi_n = xi_n.copy()
        xi_s = xi_s.copy()
        for k, b in enumerate(self.medium.branches):
            e_n, a_n, b_n = exp_segment(b["theta_n"], dt)
            e_s, a_s, b_s = exp_segment(np.where(b["theta_s"] > 0, b["theta_s"], 1.0), dt)
            c00, c01, c11 = b["n"]
            rxx = a_n * rate0[0] + b_n * rate1[0]
            ryy = a_n * rate0[1] + b_n * rate1[1]
            xi_n[k, 0] = e_n * xi_n[k, 0] + c00 * rxx + c01 * ryy
            xi_n[k, 1] = e_n * xi_n[k, 1] + c01 * rxx + c11 * ryy
            xi_s[k] = e_s * xi_s[k] + b["s"] * (a_s * rate0[2] + b_s * rate1[2])
        return xi_n, xi_s

    def drive_uniform(self, history):
        """Stress ``(sxx, syy, sxy)`` after imposing a spatially uniform strain history.

        ``history`` is a single (unbatched) :class:`StrainHistory` whose
        in-plane Kelvin rate components are applied everywhere; velocities
        play no role.  Strain and memory are advanced exactly per segment.
        """
        g = self.grid
        ny, nx = g.shape
        nb = self.medium.n_branches
        exx, eyy = np.zeros((ny, nx)), np.zeros((ny, nx))
        gxy = np.zeros((ny + 1, nx + 1))
        xi_n = np.zeros((nb, 2, ny, nx))
        xi_s = np.zeros((nb, ny + 1, nx + 1))
        r = np.asarray(history.rates, dtype=float)
        for i in range(len(history.times) - 1):
            h = history.times[i + 1] - history.times[i]
            r0, r1 = r[i][[0, 1, 5]], r[i + 1][[0, 1, 5]]
            xi_n, xi_s = self.advance_memory(xi_n, xi_s, r0, r1, h)
            exx = exx + 0.5 * h * (r0[0] + r1[0])
            eyy = eyy + 0.5 * h * (r0[1] + r1[1])
            gxy = gxy + 0.5 * h * (r0[2] + r1[2])
        return self.assemble_stress(history.t_end, exx, eyy, gxy, xi_n, xi_s)

    def assemble_stress(self, t, exx, eyy, gxy, xi_n, xi_s):
        eq = self.medium.equilibrium(t)
        c00, c01, c11 = eq["n"]
        sxx = c00 * exx + c01 * eyy
        syy = c01 * exx + c11 * eyy
        s6 = eq["s"] * gxy
        if xi_n.shape[0]:
            sxx = sxx + xi_n[:, 0].sum(axis=0)
            syy = syy + xi_n[:, 1].sum(axis=0)
            s6 = s6 + xi_s.sum(axis=0)
        return sxx, syy, self._wall_mask_zero(s6 / SQRT2)

    # ------------------------------------------------------------------ step
    def half_kick(self, state):
        ax, ay = self.accelerations(state.sxx, state.syy, state.sxy)
        vx = state.vx + self.dt * ax
        vy = state.vy + self.dt * ay
        self._apply_velocity_bc(vx, vy)
        return vx, vy

    def _finish(self, state, vx, vy, inplace=False):
        dt = self.dt
        dxx, dyy, gdot = self.strain_rates(vx, vy)
        gdot = self._wall_mask_zero(gdot)
        exx = state.exx + dt * dxx
        eyy = state.eyy + dt * dyy
        gxy = state.gxy + dt * gdot
        if self.medium.n_branches:
            u = self._upd
            xi_n = state.xi_n if inplace else state.xi_n.copy()
            xi_s = state.xi_s if inplace else state.xi_s.copy()
            # in-place updates avoid branch-sized temporaries on large grids
            for c, (ka, kb) in enumerate((("k00", "k01"), ("k01", "k11"))):
                x = xi_n[:, c]
                x *= u["E_n"]
                x += u[ka] * dxx
                x += u[kb] * dyy
            xi_s *= u["E_s"]
            xi_s += u["ks"] * gdot
        else:
            xi_n, xi_s = state.xi_n, state.xi_s
        t = (state.step + 1) * dt
        sxx, syy, sxy = self.assemble_stress(t, exx, eyy, gxy, xi_n, xi_s)
        return WaveState(t, state.step + 1, vx, vy, exx, eyy, gxy, sxx, syy, sxy, xi_n, xi_s)

    def step(self, state):
        vx, vy = self.half_kick(state)
        return self._finish(state, vx, vy)

    def snapshot(self, state, vx_next, vy_next, compact=False):
        if compact:
            return Snapshot(
                state.t, state.step,
                0.5 * (state.vx + vx_next), 0.5 * (state.vy + vy_next),
                state.exx, state.eyy, state.gxy, state.sxx, state.syy, state.sxy,
                state.xi_n, state.xi_s,
            ).compact(self.medium)
        return Snapshot(
            state.t, state.step,
            0.5 * (state.vx + vx_next), 0.5 * (state.vy + vy_next),
            state.exx, state.eyy, state.gxy, state.sxx, state.syy, state.sxy,
            state.xi_n.copy(), state.xi_s.copy(),
        )

    def run(self, state=None, compact=False):
        """Generator of snapshots every ``stride`` steps and at ``t_end``.

        With ``compact`` the snapshots carry branch-summed memory energies
        instead of the (possibly large) per-branch memory variables.

        Raises :class:`Unstable` if the leapfrog energy grows beyond
        ``growth_limit`` times its initial value.
        """
        from ..audit import leapfrog_energy

        cfg = self.config
        if state is None:
            state = self.initial_state()
        else:
            state = WaveState(**{**vars(state), "xi_n": state.xi_n.copy(), "xi_s": state.xi_s.copy()})
        e0 = None
        while True:
            vx, vy = self.half_kick(state)
            n = state.step
            want_snap = n % cfg.stride == 0 or n == self.n_steps
            want_check = n % cfg.check_every == 0 or want_snap
            if want_check:
                e = leapfrog_energy(state, vx, vy, self.medium)
                if not np.isfinite(e):
                    raise Unstable(f"non-finite energy at t={state.t:.6g}")
                if e0 is None:
                    e0 = e
                elif e > cfg.growth_limit * e0 + 1e-300:
                    raise Unstable(f"energy grew from {e0:.6g} to {e:.6g} by t={state.t:.6g}")
            if want_snap:
                yield self.snapshot(state, vx, vy, compact)
            if n >= self.n_steps:
                return
            state = self._finish(state, vx, vy, inplace=True)


