"""Report figures, rendered off-screen to PNG files.

Figures are saved without software/date metadata so identical inputs give
byte-identical files.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "figure.dpi": 100,
    "svg.hashsalt": "viscowave",
}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_energy(report, path):
    """Kinetic, stored and total energy against time, with cone energies."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5.0, 3.2))
        ax.plot(report.times, report.e_K, label="kinetic")
        ax.plot(report.times, report.e_S, label="stored")
        ax.plot(report.times, report.e_K + report.e_S, "k", lw=1.2, label="total")
        for name, (s, e) in sorted(report.cone.items()):
            ax.plot(s, e, "--", lw=1.0, label=name)
        ax.set_xlabel("t")
        ax.set_ylabel("energy")
        ax.legend(frameon=False)
        return _save(fig, path)


def plot_front(fit, bound, path):
    """Arrival radius against time with the fitted line and the bound's slope."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.0, 3.2))
        ax.plot(fit.arrivals, fit.radii, ".", ms=3, label="arrivals")
        t = np.array([fit.arrivals.min(), fit.arrivals.max()])
        ax.plot(t, fit.intercept + fit.speed * t, "k", lw=1.0, label=f"fit {fit.speed:.4g}")
        ax.plot(t, fit.intercept + bound * t, "r--", lw=1.0, label=f"bound {bound:.4g}")
        ax.set_xlabel("arrival time")
        ax.set_ylabel("radius")
        ax.legend(frameon=False)
        return _save(fig, path)


def plot_speed_field(snapshot, grid, path):
    """Grayscale ``|v|`` at cell centres."""
    vx = 0.5 * (snapshot.vx[:, :-1] + snapshot.vx[:, 1:])
    vy = 0.5 * (snapshot.vy[:-1, :] + snapshot.vy[1:, :])
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(3.6, 3.2))
        im = ax.imshow(np.hypot(vx, vy), origin="lower", extent=grid.extent, cmap="gray_r")
        fig.colorbar(im, ax=ax, label="|v|")
        ax.set_title(f"t = {snapshot.t:.4g}")
        return _save(fig, path)


def plot_prony(report, path):
    """Relative error of a Prony fit over its check grid."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.5, 3.0))
        ax.loglog(report.t, np.maximum(report.rel_err, 1e-18))
        ax.set_xlabel("t")
        ax.set_ylabel("relative error")
        return _save(fig, path)


def plot_residual(times, residuals, path):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.5, 3.0))
        ax.semilogy(times, np.maximum(residuals, 1e-300))
        ax.set_xlabel("t")
        ax.set_ylabel("work-density residual")
        return _save(fig, path)
