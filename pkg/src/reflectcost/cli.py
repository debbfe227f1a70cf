"""Command-line front end.

Subcommands: phi, rho-simulate, coupling-simulate, transport, check,
asymptotics.  Tables go to --out (CSV canonical, JSON mirror) with
'#'-prefixed metadata (seed, tolerances); identical invocations with the
same seed produce byte-identical files.  Exit codes: 0 pass, 1 check
failure, 2 usage error, 3 numerical failure.

The environment variable REFLECTCOST_THREADS caps worker threads for the
compiled kernels.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import comparison, cost, harness, spaceform, transport
from . import io as rcio
from .specfun import CurvatureDimension

EXIT_OK = 0
EXIT_CHECK_FAIL = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3

_CHECKS = ("constancy", "monotonicity", "tv-compare", "gradient",
           "ordering", "cost-properties")


def _apply_thread_cap():
    cap = os.environ.get("REFLECTCOST_THREADS")
    if cap:
        try:
            import numba
            numba.set_num_threads(max(1, int(cap)))
        except (ValueError, ImportError):
            pass


def _parse_n(text: str) -> float:
    return math.inf if text.lower() in ("inf", "infinity") else float(text)


def _parse_grid(text: str) -> list[float]:
    """start:stop:step (inclusive of stop up to fp slack) or a single value."""
    if ":" not in text:
        return [float(text)]
    start, stop, step = (float(v) for v in text.split(":"))
    if step <= 0:
        raise ValueError("grid step must be positive")
    return list(np.arange(start, stop + 0.5 * step, step))


def _emit(args, columns, rows, metadata):
    if args.out:
        rcio.write_table(args.out, columns, rows, metadata, fmt=args.format)
    else:
        for k, v in metadata.items():
            print(f"# {k} = {v}")
        print(",".join(columns))
        for r in rows:
            print(",".join(str(v) for v in r))


def cmd_phi(args) -> int:
    cd = CurvatureDimension(args.K, args.N)
    rows = []
    for t in _parse_grid(args.t):
        for a in _parse_grid(args.a):
            res = cost.phi(cost.CostQuery(cd, t, a), tol=args.tol)
            rows.append((t, a, res.value, res.method, res.error_bound))
    _emit(args, ("t", "a", "value", "method", "error_bound"),
          rows, {"seed": args.seed, "K": args.K, "N": args.N, "tol": args.tol})
    return EXIT_OK


def cmd_rho_simulate(args) -> int:
    cd = CurvatureDimension(args.K, args.N)
    dt = args.dt if args.dt else 1e-3 * min(args.t, 1.0)
    cfg = comparison.SdeConfig(dt=dt, horizon=args.t, n_paths=args.paths,
                               master_seed=args.seed)
    store = np.linspace(0.0, args.t, args.snapshots)
    ens = comparison.simulate_rho(cd, args.a, cfg, store_times=store)
    rows = []
    for q, tq in enumerate(ens.times):
        col = ens.values[:, q]
        alive = 1.0 - np.mean(~np.isnan(ens.absorbed_at) & (ens.absorbed_at <= tq))
        rows.append((tq, float(col.mean()), float(col.std()),
                     float(col.min()), float(col.max()), float(alive)))
    _emit(args, ("time", "mean", "std", "min", "max", "alive_fraction"), rows,
          {"seed": args.seed, "K": args.K, "N": args.N, "a": args.a,
           "dt": dt, "paths": args.paths})
    return EXIT_OK


def cmd_coupling_simulate(args) -> int:
    if args.space == "euclidean":
        sp = spaceform.Euclidean(2)
        x1 = spaceform.ModelPoint(sp, np.zeros(2))
        x2 = spaceform.ModelPoint(sp, np.array([args.a, 0.0]))
    elif args.space == "sphere":
        sp = spaceform.Sphere(1.0)
        x1 = spaceform.ModelPoint(sp, np.array([0.0, 0.0, 1.0]))
        x2 = spaceform.ModelPoint(
            sp, np.array([math.sin(args.a), 0.0, math.cos(args.a)]))
    elif args.space == "hyperbolic":
        sp = spaceform.Hyperboloid(1.0)
        x1 = spaceform.ModelPoint(sp, np.array([0.0, 0.0, 1.0]))
        x2 = spaceform.ModelPoint(
            sp, np.array([math.sinh(args.a), 0.0, math.cosh(args.a)]))
    else:
        raise ValueError(f"unknown space {args.space}")
    store = np.linspace(0.0, args.t, args.snapshots)
    tr = spaceform.coupled_walk_run(x1, x2, args.alpha, args.t,
                                    n_walks=args.walks, master_seed=args.seed,
                                    store_times=store)
    rows = []
    for q, tq in enumerate(tr.times):
        col = tr.distances[:, q]
        co = float(np.mean(np.nan_to_num(tr.coalesced_at, nan=np.inf) <= tq))
        rows.append((tq, float(col.mean()), float(col.std()), co))
    _emit(args, ("time", "mean_distance", "std_distance", "coalesced_fraction"),
          rows, {"seed": args.seed, "space": args.space, "a": args.a,
                 "alpha": args.alpha, "walks": args.walks})
    return EXIT_OK


def cmd_transport(args) -> int:
    c_entries = rcio.read_matrix(args.cost)
    mu = transport.DiscreteMeasure(rcio.read_measure(args.mu))
    nu = transport.DiscreteMeasure(rcio.read_measure(args.nu))
    C = transport.CostMatrix(c_entries, metric_flag=args.metric,
                             validate=args.metric)
    plan = transport.transport_cost(C, mu, nu)
    rows = [("value", plan.value), ("iterations", plan.iterations),
            ("duality_gap", plan.gap)]
    if args.oracle:
        n = c_entries.shape[0]
        if (c_entries.shape[0] == c_entries.shape[1] and n <= 8
                and np.allclose(mu.weights, 1.0 / n)
                and np.allclose(nu.weights, 1.0 / n)):
            bf = transport.brute_force_uniform(C)
            rows.append(("brute_force", bf))
            rows.append(("oracle_diff", abs(bf - plan.value)))
        else:
            print("oracle skipped: requires square n <= 8 with uniform marginals",
                  file=sys.stderr)
    if args.plan_out:
        rcio.write_matrix(args.plan_out, plan.matrix, {"value": plan.value})
    _emit(args, ("quantity", "value"), rows, {"cost": args.cost})
    return EXIT_OK


def _run_check(args) -> harness.CheckReport:
    name = args.name
    if name == "constancy":
        cd = CurvatureDimension(args.K, args.N)
        s_grid = _parse_grid(args.s_grid) if args.s_grid else None
        kw = {} if s_grid is None else {"s_grid": s_grid}
        return harness.constancy(cd, a=args.a, t=args.t, n_paths=args.paths,
                                 master_seed=args.seed, **kw)
    if name == "monotonicity":
        s_grid = _parse_grid(args.s_grid) if args.s_grid else None
        if args.space == "plane":
            return harness.monotonicity_plane(s_grid=s_grid)
        return harness.monotonicity_sphere(t=args.t, s_grid=s_grid,
                                           cost_kind=args.cost_kind)
    if name == "tv-compare":
        return harness.tv_compare(ts=(args.t,), avals=(args.a,))
    if name == "gradient":
        return harness.gradient_bound(ts=(args.t,), master_seed=args.seed)
    if name == "ordering":
        return harness.ordering(t=args.t)
    if name == "cost-properties":
        cd = CurvatureDimension(args.K, args.N)
        return harness.cost_properties(cd, ts=(args.t, 2.0 * args.t))
    raise ValueError(f"unknown check {name}")


def cmd_check(args) -> int:
    rep = _run_check(args)
    rows = [(lbl, v, tol, st) for lbl, v, tol, st in rep.rows()]
    _emit(args, ("observation", "value", "tolerance", "status"), rows,
          {"check": rep.name, "seed": args.seed})
    print(rep.summary())
    if args.report:
        payload = {"check": rep.name, "pass": rep.passed,
                   "runtime_seconds": rep.runtime_seconds,
                   "observed": [{"label": l, "value": v, "tolerance": tol}
                                for l, v, tol in rep.observed]}
        with open(args.report, "w") as fh:
            json.dump(payload, fh, indent=1)
    return EXIT_OK if rep.passed else EXIT_CHECK_FAIL


def cmd_asymptotics(args) -> int:
    rep = harness.asymptotics(master_seed=args.seed)
    rows = [(lbl, v, tol, st) for lbl, v, tol, st in rep.rows()]
    _emit(args, ("case", "deviation", "tolerance", "status"), rows,
          {"seed": args.seed})
    print(rep.summary())
    return EXIT_OK if rep.passed else EXIT_CHECK_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="reflectcost",
        description="Comparison-diffusion costs, coupled walks, and exact "
                    "discrete optimal transport on model spaces.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(q, K=True):
        if K:
            q.add_argument("--K", type=float, default=0.0)
            q.add_argument("--N", type=_parse_n, default=math.inf)
        q.add_argument("--seed", type=int, default=1234)
        q.add_argument("--out", type=str, default=None)
        q.add_argument("--format", choices=("csv", "json"), default="csv")

    q = sub.add_parser("phi", help="evaluate the cost function on (t, a) grids")
    common(q)
    q.add_argument("--t", type=str, required=True, help="value or start:stop:step")
    q.add_argument("--a", type=str, required=True, help="value or start:stop:step")
    q.add_argument("--tol", type=float, default=1e-9)
    q.set_defaults(func=cmd_phi)

    q = sub.add_parser("rho-simulate", help="simulate the comparison diffusion")
    common(q)
    q.add_argument("--a", type=float, required=True)
    q.add_argument("--t", type=float, required=True)
    q.add_argument("--dt", type=float, default=None)
    q.add_argument("--paths", type=int, default=10_000)
    q.add_argument("--snapshots", type=int, default=11)
    q.set_defaults(func=cmd_rho_simulate)

    q = sub.add_parser("coupling-simulate", help="reflection-coupled geodesic walks")
    common(q, K=False)
    q.add_argument("--space", choices=("euclidean", "sphere", "hyperbolic"),
                   default="euclidean")
    q.add_argument("--a", type=float, default=1.0)
    q.add_argument("--alpha", type=float, default=0.02)
    q.add_argument("--t", type=float, default=0.5)
    q.add_argument("--walks", type=int, default=10_000)
    q.add_argument("--snapshots", type=int, default=11)
    q.set_defaults(func=cmd_coupling_simulate)

    q = sub.add_parser("transport", help="solve a discrete OT instance from files")
    common(q, K=False)
    q.add_argument("--cost", type=str, required=True)
    q.add_argument("--mu", type=str, required=True)
    q.add_argument("--nu", type=str, required=True)
    q.add_argument("--metric", action="store_true")
    q.add_argument("--oracle", action="store_true")
    q.add_argument("--plan-out", type=str, default=None)
    q.set_defaults(func=cmd_transport)

    q = sub.add_parser("check", help="run a named verification harness")
    common(q)
    q.add_argument("name", choices=_CHECKS)
    q.add_argument("--a", type=float, default=1.0)
    q.add_argument("--t", type=float, default=1.0)
    q.add_argument("--s-grid", type=str, default=None)
    q.add_argument("--paths", type=int, default=100_000)
    q.add_argument("--space", choices=("sphere", "plane"), default="sphere")
    q.add_argument("--cost-kind", choices=("phi", "theta"), default="phi")
    q.add_argument("--report", type=str, default=None,
                   help="also write a JSON CheckReport")
    q.set_defaults(func=cmd_check)

    q = sub.add_parser("asymptotics", help="long-time scaling table")
    common(q, K=False)
    q.set_defaults(func=cmd_asymptotics)
    return p


def main(argv=None) -> int:
    _apply_thread_cap()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ArithmeticError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
