"""Command-line entry point.

Exit codes: 0 success / all certificates pass, 1 certificate failure or
unstable run, 2 usage, configuration or I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from . import mittag_leffler as ml
from .audit import audit, decomposition_audit, regular_snapshots, write_report
from .config import load_experiment, load_model
from .constitutive import (
    Ball,
    energy_densities_model,
    find_generic_violation,
    random_histories,
    speed_bound_generic,
    speed_bound_model,
    speed_bound_superposed,
)
from .errors import ConfigError, InsufficientNodes, InsufficientSnapshots, Unstable, ViscowaveError
from .wavesim import Solver
from .wavesim.io import iter_run, write_run

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class _Usage(Exception):
    pass


def _err(msg):
    print(f"error: {msg}", file=sys.stderr)


def _out_dir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _experiment(args):
    exp = load_experiment(args.config)
    if args.seed is not None:
        exp.seed = args.seed
    return exp


def cmd_simulate(args):
    exp = _experiment(args)
    out = _out_dir(args)
    solver = Solver(exp.sim)
    try:
        n = write_run(out, solver.run(compact=exp.compact), solver.medium)
    except Unstable as exc:
        _err(f"unstable run: {exc}")
        return EXIT_FAIL
    run_info = {
        "version": __version__,
        "seed": exp.seed,
        "dt": float(solver.dt),
        "n_steps": int(solver.n_steps),
        "snapshots": n,
        "speed_bound": float(exp.speed_bound),
        "config": exp.source,
    }
    (out / "run.yaml").write_text(yaml.safe_dump(run_info, sort_keys=True))
    print(f"wrote {n} snapshots to {out} (dt={solver.dt:.6g}, steps={solver.n_steps})")
    return EXIT_OK


def cmd_audit(args):
    exp = _experiment(args)
    out = _out_dir(args)
    solver = Solver(exp.sim)
    if args.run is not None:
        try:
            snaps = list(iter_run(args.run))
        except InsufficientSnapshots as exc:
            raise _Usage(str(exc)) from exc
    else:
        try:
            snaps = list(solver.run(compact=True))
        except Unstable as exc:
            _err(f"unstable run: {exc}")
            return EXIT_FAIL
    if not snaps:
        raise _Usage("no snapshots to audit")
    c_bound = exp.speed_bound
    rep = audit(snaps, solver.medium, exp.cones, c_bound, exp.front, exp.empty_cones, exp.threshold)
    rep.notes.append(f"model speed bound {c_bound:.6g}; seed {exp.seed}")
    write_report(rep, out)
    if not args.no_figures:
        from . import plotting

        plotting.plot_energy(rep, out / "energy.png")
        if rep.front is not None:
            plotting.plot_front(rep.front, c_bound, out / "front.png")
        if rep.residual is not None:
            t, r = decomposition_audit(regular_snapshots(snaps), solver.medium)
            plotting.plot_residual(t, r, out / "residual.png")
        plotting.plot_speed_field(snaps[-1], exp.sim.grid, out / "speed_final.png")
    for name, cert in sorted(rep.certificates.items()):
        print(f"{'PASS' if cert['pass'] else 'FAIL'} {name}")
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_check_dissipation(args):
    if args.samples < 1:
        raise _Usage("--samples must be at least 1")
    model = load_model(args.config)
    rng = np.random.default_rng(0 if args.seed is None else args.seed)
    hist = random_histories(rng, args.samples, args.t_end, args.time_samples)
    rows = []
    bad = 0
    for frac in (0.5, 1.0):
        e_s, ed = energy_densities_model(model, None, hist, frac * hist.t_end)
        bad += int(np.sum(ed < 0) + np.sum(e_s < 0))
        rows.append((frac * hist.t_end, float(ed.min()), float(e_s.min())))
    result = {"kind": model.kind, "histories": args.samples, "model_violations": bad}
    for t, ed_min, es_min in rows:
        print(f"t={t:.6g}: min e_D rate {ed_min:.6e}, min e_S {es_min:.6e}")
    if model.kind == "ExpConvIso" or args.generic:
        v = find_generic_violation(model, max_evals=args.max_evals)
        result["generic_violation_found"] = v.found
        result["generic_F"] = v.F
        result["model_e_D_rate_on_same_history"] = v.e_D_rate
        result["evaluations"] = v.evaluations
        print(
            f"generic functional: {'positive value found' if v.found else 'no positive value found'} "
            f"(F={v.F:.6e}, model e_D rate={v.e_D_rate:.6e}, {v.evaluations} evaluations)"
        )
    print(f"model-specific sign violations: {bad}")
    if args.out:
        out = _out_dir(args)
        (out / "dissipation.json").write_text(json.dumps(result, indent=2, sort_keys=True) + "\n")
    return EXIT_OK if bad == 0 else EXIT_FAIL


def cmd_fit_prony(args):
    try:
        approx, rep = ml.prony_fit(args.alpha, args.a, args.nodes, (args.tmin, args.tmax), tol=args.tol, polish=args.polish)
        status = EXIT_OK
    except InsufficientNodes as exc:
        if exc.approx is None:
            raise _Usage(str(exc)) from exc
        _err(str(exc))
        approx, rep, status = exc.approx, exc.report, EXIT_FAIL
    print(f"nodes={len(approx.nodes)} mass={approx.mass:.8f} max_rel_err={rep.max_rel_err:.3e}")
    if args.out:
        out = _out_dir(args)
        with open(out / "prony.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["rate", "weight"])
            w.writerows((repr(float(r)), repr(float(wt))) for r, wt in zip(approx.nodes, approx.weights))
        with open(out / "prony_error.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "exact", "approx", "rel_err"])
            w.writerows(tuple(repr(float(v)) for v in row) for row in zip(rep.t, rep.exact, rep.approx, rep.rel_err))
        if not args.no_figures:
            from . import plotting

            plotting.plot_prony(rep, out / "prony_error.png")
    return status


def cmd_speed_report(args):
    if args.radius is None or args.radius <= 0 or args.center is None:
        raise _Usage("region needs --center X Y and a positive --radius")
    if args.rho <= 0:
        raise _Usage("--rho must be positive")
    model = load_model(args.config)
    region = Ball(tuple(args.center), args.radius)
    gen = speed_bound_generic(model, region, args.t_max, args.rho)
    mod = speed_bound_model(model, region, args.t_max, args.rho)
    sup = speed_bound_superposed(model, region, args.t_max, args.rho)
    print(f"{'bound':<12}{'speed':>16}")
    print(f"{'generic':<12}{gen:>16.10g}")
    print(f"{'model':<12}{mod:>16.10g}")
    print(f"{'superposed':<12}{sup:>16.10g}")
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="viscowave", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out_required=False):
        sp.add_argument("--config", required=True, help="experiment or model YAML file")
        sp.add_argument("--out", required=out_required, help="output directory")
        sp.add_argument("--seed", type=int, default=None, help="random seed (overrides the config)")

    s = sub.add_parser("simulate", help="run the wave solver and write snapshots")
    common(s, True)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("audit", help="energy certificates for a run")
    common(s, True)
    s.add_argument("--run", help="directory written by 'simulate' (default: simulate in memory)")
    s.add_argument("--no-figures", action="store_true")
    s.set_defaults(func=cmd_audit)

    s = sub.add_parser("check-dissipation", help="sign checks of the dissipation rate on random histories")
    common(s)
    s.add_argument("--samples", type=int, default=1000, help="number of random histories")
    s.add_argument("--time-samples", type=int, default=64)
    s.add_argument("--t-end", type=float, default=2.0)
    s.add_argument("--generic", action="store_true", help="also search for a positive generic functional")
    s.add_argument("--max-evals", type=int, default=10_000)
    s.set_defaults(func=cmd_check_dissipation)

    s = sub.add_parser("fit-prony", help="exponential-sum fit of the fractional relaxation function")
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--a", type=float, required=True)
    s.add_argument("--nodes", type=int, default=64)
    s.add_argument("--tmin", type=float, default=None)
    s.add_argument("--tmax", type=float, default=None)
    s.add_argument("--tol", type=float, default=None)
    s.add_argument("--polish", action="store_true")
    s.add_argument("--out")
    s.add_argument("--seed", type=int, default=None, help="unused; accepted for uniformity")
    s.add_argument("--no-figures", action="store_true")
    s.set_defaults(func=cmd_fit_prony)

    s = sub.add_parser("speed-report", help="generic, model-specific and superposed speed bounds")
    common(s)
    s.add_argument("--center", type=float, nargs=2, default=(0.0, 0.0))
    s.add_argument("--radius", type=float, default=1.0)
    s.add_argument("--rho", type=float, default=1.0)
    s.add_argument("--t-max", type=float, default=0.0)
    s.set_defaults(func=cmd_speed_report)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    if args.command == "fit-prony":
        if args.tmin is None:
            args.tmin = 1e-3 * args.a
        if args.tmax is None:
            args.tmax = 1e3 * args.a
    try:
        return args.func(args)
    except (_Usage, ConfigError) as exc:
        _err(str(exc))
        return EXIT_USAGE
    except (OSError, ValueError) as exc:
        _err(str(exc))
        return EXIT_USAGE
    except ViscowaveError as exc:
        _err(f"{type(exc).__name__}: {exc}")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
