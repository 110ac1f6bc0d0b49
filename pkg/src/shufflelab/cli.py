"""Command-line front end: ``shufflelab <subcommand> [flags]``.

Exit status: 0 on success, 1 on a usage or input error, 2 when the command
ran but its acceptance check failed.

CSV outputs (first lines are ``#`` provenance comments):

  exact-tv        n,t,tv
  simulate        step,c_t,d_t              (--trajectory)
  zeta-check      m,state                   (--path-csv)
  sxy-check       m,S,X,Y                   (--path-csv)
  delta-stat      replica,total,survivors,removed
  coupling-12     step,I,J,M,violation_flag (--monitor-csv)
  cutoff-scan     n,t,p_shuffle,p_uniform,tv_lower
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from dataclasses import asdict
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from . import chains, couplings, exact, harness, statistics
from .deck import simulate_trajectory
from .rng import resolve_seed

EXIT_OK, EXIT_USAGE, EXIT_FAIL = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    return obj


def _schema(name: str) -> dict:
    return json.loads(resources.files("shufflelab").joinpath("schemas", name).read_text())


def _args_hash(args: argparse.Namespace) -> str:
    skip = {"workers", "out", "plot_script", "func", "csv", "trajectory", "path_csv", "monitor_csv", "config"}
    d = {k: v for k, v in vars(args).items() if k not in skip}
    blob = json.dumps(_jsonable(d), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _provenance(args, config_hash: str | None = None) -> dict:
    return {
        "version": __version__,
        "command": args.command,
        "config_hash": config_hash or _args_hash(args),
        "seed": args.seed,
    }


def _header_lines(prov: dict) -> list[str]:
    return [f"{k}={v}" for k, v in prov.items()]


def _emit(args, result: dict, passed: bool | None = None, config_hash: str | None = None, schema: str | None = None):
    doc = {"provenance": _provenance(args, config_hash), "result": _jsonable(result), "passed": passed}
    jsonschema.validate(doc, _schema("envelope.schema.json"))
    if schema:
        jsonschema.validate(doc["result"], _schema(schema))
    text = json.dumps(doc, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return EXIT_OK if passed in (None, True) else EXIT_FAIL


def _plot(args, csv_path: str | None, x: str, y: str, title: str) -> None:
    if not args.plot_script or not csv_path:
        return
    script = "\n".join([
        f"# {title}; generated by shufflelab {__version__}",
        "set datafile separator ','",
        "set key autotitle columnhead",
        f"set xlabel '{x}'",
        f"set ylabel '{y}'",
        f"plot '{csv_path}' using '{x}':'{y}' with linespoints",
        "",
    ])
    Path(args.plot_script).write_text(script)


# --- subcommands ---------------------------------------------------------------------


def cmd_exact_tv(args):
    tvs = exact.tv_curve(args.n, args.t_max, max_n=args.max_n, workers=args.workers)
    prov = _provenance(args)
    if args.csv:
        exact.write_tv_csv(args.csv, args.n, tvs, _header_lines(prov))
        _plot(args, args.csv, "t", "tv", f"exact TV distance, n={args.n}")
        return _emit(args, {"n": args.n, "t_max": args.t_max, "tv": tvs, "csv": args.csv})
    for line in _header_lines(prov):
        print(f"# {line}")
    print("n,t,tv")
    for t, tv in enumerate(tvs):
        print(f"{args.n},{t},{float(tv)!r}")
    return EXIT_OK


def cmd_simulate(args):
    deck, surv, traj = simulate_trajectory(args.n, args.t, args.seed)
    if args.trajectory:
        traj.to_csv(args.trajectory)
    res = {"n": args.n, "t": args.t, "survivors": len(surv)}
    if args.n <= 1000:
        res["sigma"] = deck.sigma
    return _emit(args, res)


def cmd_kernel_check(args):
    kc = chains.kernel_check(args.n, args.j, args.t, args.reps, args.seed, args.min_count, args.workers)
    res = {
        "n": args.n, "j": args.j, "t": args.t, "reps": args.reps, "buckets": kc.buckets,
        "max_deviation": kc.max_deviation, "tolerance": args.tol,
    }
    return _emit(args, res, bool(kc.buckets) and kc.max_deviation < args.tol)


def cmd_zeta_check(args):
    if args.path_csv:
        path = chains.simulate_zeta(args.n, args.j, args.M, args.t, args.seed)
        chains.write_path_csv(args.path_csv, path, _header_lines(_provenance(args)))
        _plot(args, args.path_csv, "m", "state", "zeta path")
    cond = exact.exact_conditional_path_law(args.n, args.j, args.t)
    zlaw = chains.zeta_path_law(args.n, args.j, args.M, args.t)
    tv = sum(abs(cond.get(k, 0) - zlaw.get(k, 0)) for k in set(cond) | set(zlaw)) / 2
    exceed = sum(p for k, p in zlaw.items() if max(abs(x - args.j) for x in k) > args.M)
    rows = []
    for u in range(0, args.M + 1):
        a = sum(p for k, p in cond.items() if max(abs(x - args.j) for x in k) > u)
        b = sum(p for k, p in zlaw.items() if max(abs(x - args.j) for x in k) > u)
        rows.append({"u": u, "conditioned": float(a), "zeta": float(b), "equal": a == b})
    ok = tv <= exceed and all(r["equal"] for r in rows)
    return _emit(args, {"tv_paths": float(tv), "zeta_exceeds_M": float(exceed), "exceedance": rows}, ok)


def cmd_sxy_check(args):
    res = {}
    ok = True
    if args.path_csv:
        path = chains.simulate_sxy(args.n, args.j, args.M, args.t, args.seed)
        chains.write_path_csv(args.path_csv, path, _header_lines(_provenance(args)))
        _plot(args, args.path_csv, "m", "S", "S component")
    if args.exact:
        s = chains.sxy_law(args.n, args.j, args.M, args.t)
        z = chains.zeta_law(args.n, args.j, args.M, args.t)
        summed: dict = {}
        for (a, b, c), p in s.items():
            summed[a + b + c + args.j] = summed.get(a + b + c + args.j, 0) + p
        tv = sum(abs(summed.get(k, 0) - z.get(k, 0)) for k in set(summed) | set(z)) / 2
        res["tv_sum_vs_zeta"] = float(tv)
        ok &= tv == 0
    if args.reps:
        checks = chains.levy_domination_check(args.n, args.j, args.M, args.t, args.deltas, args.reps, args.seed,
                                              args.workers)
        res["checks"] = [asdict(c) for c in checks]
        ok &= all(c.passed for c in checks)
    if args.delta is not None:
        rep = chains.bound_evaluators(args.n, args.j, args.M, args.t, args.delta, args.u, args.C)
        res["bounds"] = rep.to_dict()
        jsonschema.validate(_jsonable(res["bounds"]), _schema("bound_report.schema.json"))
    return _emit(args, res, ok)


def cmd_clt(args):
    r = statistics.clt_test(args.n, args.j, args.t, args.reps, args.seed, args.workers)
    res = {k: v for k, v in vars(r).items() if k != "samples"}
    return _emit(args, res, (r.ks < args.tol) if r.applicable else None)


def cmd_delocalization(args):
    r = statistics.delocalization_test(args.n, args.t, args.alpha, args.reps, args.seed, workers=args.workers)
    res = {"grid": r.grid, "alphas": r.alphas, "freq": r.freq, "bound": r.bound, "se": r.se, "passed": r.passed}
    return _emit(args, res, all(r.passed))


def cmd_delta_stat(args):
    band = statistics.BandConfig(args.n, args.eps, args.alpha)
    prov = _provenance(args)
    if args.measure == "uniform":
        totals = statistics.sample_uniform_totals(band, args.reps, args.seed, args.workers)
        checks = statistics.uniform_checks(totals, band, ks=args.k)
        counts = np.stack([totals, np.zeros_like(totals), np.zeros_like(totals)], axis=1)
        extra = {"moments": asdict(statistics.uniform_delta_moments(band))}
    else:
        sched = statistics.schedule(args.n, args.cn, args.eps, args.alpha) if args.t is None else \
            statistics.schedule_at(args.n, args.t, args.eps, args.alpha)
        counts = statistics.sample_shuffle_counts(band, [sched.t], args.reps, args.seed, args.workers)[:, 0, :]
        checks = statistics.schedule_checks(counts, sched, ks=args.k)
        extra = {"t": sched.t, "p": sched.p, "K": sched.K, "v_alpha": sched.v}
    if args.csv:
        statistics.write_counts_csv(args.csv, counts, _header_lines(prov))
        _plot(args, args.csv, "replica", "total", "band statistic per replica")
    tot = counts[:, 0]
    res = {"measure": args.measure, "mean": float(tot.mean()), "variance": float(tot.var(ddof=1)),
           "checks": [asdict(c) for c in checks], **extra}
    return _emit(args, res, all(c.passed for c in checks))


def cmd_coupling_ab(args):
    s = couplings.monitor_AB(args.n, args.runs, args.steps, args.seed, args.workers)
    return _emit(args, {"n": args.n, "runs": args.runs, "steps": args.steps, "violations": s.violations}, s.passed)


def cmd_coupling_12(args):
    m = args.m if args.m is not None else args.n // 3 or 1
    s = couplings.monitor_12(args.n, m, args.runs, args.steps, args.seed, args.workers, log=bool(args.monitor_csv))
    if args.monitor_csv:
        couplings.write_monitor_csv(args.monitor_csv, s.log, _header_lines(_provenance(args)))
        _plot(args, args.monitor_csv, "step", "M", "deck 2 marked position")
    res = {"n": args.n, "m": m, "runs": args.runs, "steps": args.steps, "violations": s.violations}
    ok = s.passed
    if args.tail is not None:
        r, delta = args.tail
        td = couplings.tail_domination_check(args.n, m, args.steps, int(r), delta, args.runs, args.seed,
                                             workers=args.workers)
        res["tail_domination"] = asdict(td)
        ok &= td.passed
    return _emit(args, res, ok)


def _config_from_args(args) -> harness.ExperimentConfig:
    overrides = {
        "n": args.n, "eps": args.eps, "alpha": args.alpha, "k": args.k, "c_n": args.cn, "t": args.t,
        "reps_shuffle": args.reps, "reps_uniform": args.reps_uniform if args.reps_uniform else args.reps,
        "seed": args.seed, "workers": args.workers,
    }
    if args.config:
        return harness.load_config(args.config, **overrides)
    if args.n is None:
        raise UsageError("--n is required without --config")
    cfg = harness.ExperimentConfig.from_dict({k: v for k, v in overrides.items() if v is not None})
    cfg.validate()
    return cfg


def cmd_tv_bound(args):
    cfg = _config_from_args(args)
    r = harness.run_experiment(cfg)
    return _emit(args, r.to_dict(), None, cfg.hash(), "mc_result.schema.json")


def cmd_cutoff_scan(args):
    cfg = _config_from_args(args)
    if (args.cn_grid is None) == (args.t_grid is None):
        raise UsageError("give exactly one of --cn-grid or --t-grid")
    table = harness.cutoff_scan(cfg, c_values=args.cn_grid, t_values=args.t_grid)
    prov = _provenance(args, cfg.hash())
    if args.csv:
        table.to_csv(args.csv, _header_lines(prov))
        _plot(args, args.csv, "t", "tv_lower", f"TV lower bound, n={cfg.n}")
    res = {"n": cfg.n, "rows": [dict(zip(["n", "t", "p_shuffle", "p_uniform", "tv_lower"], r)) for r in table.rows()]}
    return _emit(args, res, None, cfg.hash())


# --- parser ---------------------------------------------------------------------------


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    from ._parallel import default_workers

    common = _Parser(add_help=False)
    common.add_argument("--seed", default=None, help="64-bit seed, decimal or 0x-hex (env SHUFFLE_LAB_SEED)")
    common.add_argument("--workers", type=int, default=default_workers(), help="worker threads")
    common.add_argument("--out", default=None, help="write the JSON result here instead of stdout")
    common.add_argument("--plot-script", default=None, help="write a gnuplot script for the CSV output")

    p = _Parser(prog="shufflelab", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--version", action="version", version=f"shufflelab {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("exact-tv", parents=[common], help="exact TV distance curve (CSV n,t,tv)")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--t-max", type=int, required=True)
    s.add_argument("--max-n", type=int, default=exact.MAX_EVOLVE_N)
    s.add_argument("--csv", default=None)
    s.set_defaults(func=cmd_exact_tv)

    s = sub.add_parser("simulate", parents=[common], help="shuffle the identity deck (CSV step,c_t,d_t)")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--t", type=int, required=True)
    s.add_argument("--trajectory", default=None)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("kernel-check", parents=[common], help="empirical conditioned transitions vs closed form")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--j", type=int, required=True)
    s.add_argument("--t", type=int, required=True)
    s.add_argument("--reps", type=int, default=100_000)
    s.add_argument("--min-count", type=int, default=100_000)
    s.add_argument("--tol", type=float, default=5e-3)
    s.set_defaults(func=cmd_kernel_check)

    s = sub.add_parser("zeta-check", parents=[common], help="exact truncation checks (CSV m,state)")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--j", type=int, required=True)
    s.add_argument("--M", type=int, required=True)
    s.add_argument("--t", type=int, required=True)
    s.add_argument("--path-csv", default=None)
    s.set_defaults(func=cmd_zeta_check)

    s = sub.add_parser("sxy-check", parents=[common], help="(S,X,Y) law, maximal inequalities, bounds (CSV m,S,X,Y)")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--j", type=int, required=True)
    s.add_argument("--M", type=int, required=True)
    s.add_argument("--t", type=int, required=True)
    s.add_argument("--exact", action="store_true", help="compare exact laws (small n, t only)")
    s.add_argument("--reps", type=int, default=0, help="Monte Carlo replicas for the inequality checks")
    s.add_argument("--deltas", type=_floats, default=[5.0, 10.0, 20.0])
    s.add_argument("--delta", type=float, default=None, help="evaluate the tail bounds at this delta")
    s.add_argument("--u", type=float, default=0.0)
    s.add_argument("--C", type=float, default=chains.BERRY_ESSEEN_C)
    s.add_argument("--path-csv", default=None)
    s.set_defaults(func=cmd_sxy_check)

    s = sub.add_parser("clt", parents=[common], help="KS distance of the standardized position")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--j", type=int, required=True)
    s.add_argument("--t", type=int, required=True)
    s.add_argument("--reps", type=int, default=20_000)
    s.add_argument("--tol", type=float, default=0.05)
    s.set_defaults(func=cmd_clt)

    s = sub.add_parser("delocalization", parents=[common], help="maximal displacement frequencies over a grid")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--t", type=int, required=True)
    s.add_argument("--alpha", type=_floats, default=[1.5, 2.0])
    s.add_argument("--reps", type=int, default=10_000)
    s.set_defaults(func=cmd_delocalization)

    s = sub.add_parser("delta-stat", parents=[common], help="band statistic samples (CSV replica,total,...)")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--eps", type=float, default=0.5)
    s.add_argument("--alpha", type=float, default=1.0)
    s.add_argument("--k", type=_floats, default=[2.0, 3.0])
    s.add_argument("--cn", type=float, default=3.0)
    s.add_argument("--t", type=int, default=None)
    s.add_argument("--reps", type=int, default=10_000)
    s.add_argument("--measure", choices=["uniform", "shuffle"], default="uniform")
    s.add_argument("--csv", default=None)
    s.set_defaults(func=cmd_delta_stat)

    s = sub.add_parser("coupling-ab", parents=[common], help="deck A/B coupling invariant monitor")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--runs", type=int, default=10_000)
    s.add_argument("--steps", type=int, default=100)
    s.set_defaults(func=cmd_coupling_ab)

    s = sub.add_parser("coupling-12", parents=[common], help="deck 1/2 coupling monitor (CSV step,I,J,M,violation_flag)")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--m", type=int, default=None)
    s.add_argument("--runs", type=int, default=10_000)
    s.add_argument("--steps", type=int, default=100)
    s.add_argument("--tail", type=float, nargs=2, metavar=("R", "DELTA"), default=None,
                   help="also run the tail domination check at steps=t")
    s.add_argument("--monitor-csv", default=None)
    s.set_defaults(func=cmd_coupling_12)

    for name, helptext in (("tv-bound", "Monte Carlo TV lower bound (JSON)"),
                           ("cutoff-scan", "TV lower bound over a grid (CSV n,t,p_shuffle,p_uniform,tv_lower)")):
        s = sub.add_parser(name, parents=[common], help=helptext)
        s.add_argument("--config", default=None, help="JSON or TOML experiment file")
        s.add_argument("--n", type=int, default=None)
        s.add_argument("--eps", type=float, default=None)
        s.add_argument("--alpha", type=float, default=None)
        s.add_argument("--k", type=float, default=None)
        s.add_argument("--cn", type=float, default=None)
        s.add_argument("--t", type=int, default=None)
        s.add_argument("--reps", type=int, default=None)
        s.add_argument("--reps-uniform", type=int, default=None)
        if name == "cutoff-scan":
            s.add_argument("--cn-grid", type=_floats, default=None)
            s.add_argument("--t-grid", type=_ints, default=None)
            s.add_argument("--csv", default=None)
            s.set_defaults(func=cmd_cutoff_scan)
        else:
            s.set_defaults(func=cmd_tv_bound)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        args.seed = resolve_seed(args.seed)
        return args.func(args)
    except (UsageError, ValueError) as exc:
        print(f"shufflelab {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
