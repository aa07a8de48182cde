"""Command-line front end.

    mobicond <spread|conductance|gap-sweep|tradeoff|ring|oracle-check> [flags]

Global flags: --seed (required; no wall-clock seeding), --out, --threads,
--config <file> with flat key=value lines (command-line flags override the
file).  Every command writes ``<out>/<command>-<seed>/`` with a
``manifest.json`` and its data files; identical (config, seed) reruns are
byte-identical on every CSV and SVG.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import conductance as cond
from . import experiments, tradeoff
from .gossip import spreading_time
from .mobility import Mobility, MobilitySpec
from .runio import RunManifest, format_value, write_csv
from .svgplot import scatter_svg

MODELS = tuple(m.value for m in Mobility)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mobicond",
        description="Gossip spreading and mobile-conductance experiments "
                    "for mobile networks on the unit square.",
    )
    parser.add_argument("--version", action="version", version=f"mobicond {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, required=True,
                        help="master seed (required; reruns are byte-identical)")
    common.add_argument("--out", default="runs", help="output root directory")
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                        help="worker processes for independent trials")
    common.add_argument("--config", help="flat key=value config file; flags override it")

    model = argparse.ArgumentParser(add_help=False)
    model.add_argument("--model", choices=MODELS, default="fr")
    model.add_argument("--vmax", type=float, help="speed bound (vc model)")
    model.add_argument("--k", type=int, help="mobile-node count (pr model)")
    model.add_argument("--nv", type=int, help="vertical movers (1d model)")
    model.add_argument("--nh", type=int, help="horizontal movers (1d model)")
    model.add_argument("--boundary", choices=("clip", "reflect"), default="clip",
                       help="wall rule for the vc model")

    p = sub.add_parser("spread", parents=[common, model],
                       help="Monte Carlo epsilon-spreading time")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--eps", type=float, default=0.01)
    p.add_argument("--trials", type=int, default=500)
    p.add_argument("--sources", type=int, default=5)
    p.add_argument("--max-slots", type=int, default=10**6)
    p.add_argument("--push-only", action="store_true")

    p = sub.add_parser("conductance", parents=[common, model],
                       help="Monte Carlo mobile conductance")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--samples", type=int, default=2000)
    p.add_argument("--cut", choices=("bisection", "brute-force"), default="bisection")

    p = sub.add_parser("gap-sweep", parents=[common, model],
                       help="spreading-time gap across an n r^2 grid")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--eps", type=float, default=0.01)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--sources", type=int, default=1)
    p.add_argument("--nr2-grid", help="comma-separated n r^2 values")
    p.add_argument("--nr2-min", type=float, default=0.05)
    p.add_argument("--nr2-max", type=float, default=8.0)
    p.add_argument("--nr2-points", type=int, default=15)
    p.add_argument("--max-slots", type=int, default=10**6)
    p.add_argument("--inverse-gap", action="store_true",
                   help="emit t_spr/t_ref instead of t_ref/t_spr")

    p = sub.add_parser("tradeoff", parents=[common],
                       help="mobility-connectivity thresholds")
    p.add_argument("--model", choices=("vc", "pr", "1d"), required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--c", type=float, default=1.0, help="order-constant multiplier")
    p.add_argument("--empirical", action="store_true",
                   help="also run the bisection search against the ring benchmark")
    p.add_argument("--target", type=float,
                   help="target slot count (default: measured ring time)")
    p.add_argument("--ring-trials", type=int, default=200)
    p.add_argument("--eps", type=float, default=0.01)
    p.add_argument("--trials", type=int, default=60, help="trials per search probe")
    p.add_argument("--search-lo", type=float, default=0.002)
    p.add_argument("--search-hi", type=float, default=1.0)
    p.add_argument("--tol", type=float, default=0.01)
    p.add_argument("--max-slots", type=int, default=10**5)

    p = sub.add_parser("ring", parents=[common],
                       help="static ring benchmark table")
    p.add_argument("--n-grid", default="64,128,256,512")
    p.add_argument("--eps", type=float, default=0.01)
    p.add_argument("--trials", type=int, default=300)
    p.add_argument("--max-slots", type=int, default=10**6)

    p = sub.add_parser("oracle-check", parents=[common],
                       help="run the conductance invariants; non-zero exit on FAIL")
    p.add_argument("--fast", action="store_true", help="smaller Monte Carlo sizes")

    return parser


def _inject_config(argv: list[str]) -> list[str]:
    """Splice key=value pairs from --config in before user flags."""
    if "--config" not in argv:
        return argv
    idx = argv.index("--config")
    if idx + 1 >= len(argv):
        raise SystemExit("--config needs a file path")
    path = Path(argv[idx + 1])
    if not path.is_file():
        raise SystemExit(f"config file not found: {path}")
    extra: list[str] = []
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise SystemExit(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        flag = "--" + key.replace("_", "-")
        if value.lower() in ("true", "false"):
            if value.lower() == "true":
                extra.append(flag)
        else:
            extra.extend([flag, value])
    # file values first so explicit flags win
    return argv[:1] + extra + argv[1:]


def _build_spec(args) -> MobilitySpec:
    kind = Mobility(args.model)
    if kind is Mobility.VELOCITY_CONSTRAINED:
        if args.vmax is None:
            raise ValueError("--model vc requires --vmax")
        return MobilitySpec.velocity_constrained(args.vmax, boundary=args.boundary)
    if kind is Mobility.PARTIALLY_RANDOM:
        if args.k is None:
            raise ValueError("--model pr requires --k")
        return MobilitySpec.partially_random(args.k)
    if kind is Mobility.ONE_DIMENSIONAL:
        if args.nv is None or args.nh is None:
            raise ValueError("--model 1d requires --nv and --nh")
        return MobilitySpec.one_dimensional(args.nv, args.nh)
    for name in ("vmax", "k", "nv", "nh"):
        if getattr(args, name, None) is not None:
            raise ValueError(f"--{name} does not apply to --model {args.model}")
    return MobilitySpec(kind)


class RunDir:
    """Tracks files written by one command so failures leave nothing behind."""

    def __init__(self, args):
        self.path = Path(args.out) / f"{args.command}-{args.seed}"
        self.manifest = RunManifest(
            command=args.command,
            seed=args.seed,
            config={k: v for k, v in sorted(vars(args).items())
                    if k not in ("config",) and v is not None},
            version=__version__,
        )
        self.written: list[Path] = []

    def __enter__(self):
        self.path.mkdir(parents=True, exist_ok=True)
        self.manifest.begin(self.path)
        self.written.append(self.path / RunManifest.PATH_NAME)
        return self

    def csv(self, name: str, header: list[str], rows) -> Path:
        target = self.path / name
        write_csv(target, header, rows)
        self.written.append(target)
        return target

    def text(self, name: str, content: str) -> Path:
        target = self.path / name
        target.write_text(content, encoding="utf-8", newline="\n")
        self.written.append(target)
        return target

    def json(self, name: str, payload) -> Path:
        return self.text(name, json.dumps(payload, indent=2, sort_keys=True) + "\n")

    def __exit__(self, exc_type, exc, tb):
        if exc_type is None:
            self.manifest.finish(self.path)
        else:
            for target in self.written:
                target.unlink(missing_ok=True)
        return False


def cmd_spread(args) -> int:
    spec = _build_spec(args)
    result = spreading_time(
        args.n, args.r, spec, args.eps, args.trials, args.sources,
        np.random.default_rng(args.seed), max_slots=args.max_slots,
        push_only=args.push_only, threads=args.threads,
    )
    with RunDir(args) as run:
        rows = [
            (result.sources[s], t, result.completion_times[s, t])
            for s in range(args.sources)
            for t in range(args.trials)
        ]
        run.csv("spread.csv", ["source", "trial", "completion_slots"], rows)
        run.json("summary.json", {
            "t_spr": format_value(result.t_spr),
            "epsilon": args.eps,
            "trials": args.trials,
            "sources_sampled": args.sources,
            "failed_fraction": result.failed_fraction,
        })
    print(f"t_spr(eps={args.eps}) = {format_value(result.t_spr)} slots "
          f"({args.trials} trials x {args.sources} sources)")
    return 0


CONDUCTANCE_HEADER = ["model", "n", "r", "samples", "cut", "mean", "stderr",
                      "closed_form", "agrees", "note"]


def cmd_conductance(args) -> int:
    spec = _build_spec(args)
    if args.cut == "brute-force" and args.n > cond.BRUTE_FORCE_MAX_N:
        raise ValueError(f"brute-force cut enumeration is limited to "
                         f"n <= {cond.BRUTE_FORCE_MAX_N} (got n={args.n})")
    rng = np.random.default_rng(args.seed)
    rows = []

    def report_row(report, cut_name):
        closed = report.closed_form if report.closed_form is not None else math.nan
        agrees = "" if report.agrees is None else str(report.agrees).lower()
        est = report.estimate
        return (args.model, args.n, args.r, est.samples, cut_name,
                est.mean, est.stderr, closed, agrees, report.note)

    if args.cut == "brute-force":
        brute = cond.brute_force_conductance(args.n, args.r, spec,
                                             samples_per_cut=args.samples,
                                             rng=rng.spawn(1)[0])
        closed = (cond.fr_closed_form(args.n, args.r).exact
                  if spec.kind is Mobility.FULLY_RANDOM else math.nan)
        est = brute.estimate
        agrees = ("" if math.isnan(closed)
                  else str(abs(est.mean - closed) <= 3.0 * est.stderr).lower())
        rows.append((args.model, args.n, args.r, est.samples, "brute-force-min",
                     est.mean, est.stderr, closed, agrees,
                     f"argmin size {brute.minimizing_size}"))
    bis = experiments.conductance_report(args.n, args.r, spec, "bisection",
                                         args.samples, rng.spawn(1)[0],
                                         threads=args.threads)
    rows.append(report_row(bis, "bisection"))
    with RunDir(args) as run:
        run.csv("conductance.csv", CONDUCTANCE_HEADER, rows)
    for row in rows:
        print(f"{row[4]}: mean={format_value(row[5])} stderr={format_value(row[6])}"
              + (f" closed_form={format_value(row[7])} agrees={row[8]}"
                 if not (isinstance(row[7], float) and math.isnan(row[7])) else "")
              + (f" [{row[9]}]" if row[9] else ""))
    return 0


def cmd_gap_sweep(args) -> int:
    spec = _build_spec(args)
    if args.nr2_grid:
        grid = [float(x) for x in args.nr2_grid.split(",")]
    else:
        grid = experiments.default_nr2_grid(args.nr2_min, args.nr2_max,
                                            args.nr2_points).tolist()
    result = experiments.gap_sweep(
        args.n, grid, spec, args.eps, args.trials,
        np.random.default_rng(args.seed), sources_sampled=args.sources,
        max_slots=args.max_slots, threads=args.threads,
    )
    rows = []
    for row in result.rows:
        gap = row.gap
        if args.inverse_gap:
            gap = row.t_spr / row.t_ref if math.isfinite(row.t_spr) else math.inf
        rows.append((row.n, row.r, row.nr2, row.t_spr, row.t_ref, gap))
    line = None
    sparse = result.sparse_rows
    if sparse and math.isfinite(result.slope):
        xs = np.geomspace(sparse[0].nr2, experiments.SPARSE_FIT_CUTOFF, 40)
        line = [(float(x), float(math.exp(result.intercept) * x**result.slope))
                for x in xs]
    svg = scatter_svg([r.nr2 for r in result.rows],
                      [r.gap for r in result.rows],
                      "n r^2", "gap", line=line)
    with RunDir(args) as run:
        run.csv("gap.csv", ["n", "r", "nr2", "t_spr", "t_ref", "gap"], rows)
        run.text("gap.svg", svg)
        run.json("summary.json", {
            "r_ref": result.r_ref,
            "t_ref": format_value(result.t_ref),
            "sparse_loglog_slope": format_value(result.slope),
            "sparse_loglog_intercept": format_value(result.intercept),
        })
    print(f"t_ref={format_value(result.t_ref)} at r_ref={result.r_ref:.6g}; "
          f"sparse log-log slope {format_value(result.slope)}")
    return 0


def cmd_tradeoff(args) -> int:
    analytic = {
        "vc": tradeoff.velocity_threshold,
        "pr": tradeoff.mobility_ratio_threshold,
        "1d": tradeoff.mobility_balance_threshold,
    }[args.model](args.n, args.r, args.c)
    result = analytic
    rng = np.random.default_rng(args.seed)
    target = args.target
    if args.empirical:
        if target is None:
            from .gossip import ring_spreading_time
            ring = ring_spreading_time(args.n, args.eps, args.ring_trials,
                                       rng.spawn(1)[0], threads=args.threads)
            target = ring.t_spr
        search = tradeoff.empirical_threshold_search(
            args.n, args.r, args.model, target,
            args.search_lo, args.search_hi, args.tol, args.trials,
            rng.spawn(1)[0], epsilon=args.eps, max_slots=args.max_slots,
            threads=args.threads,
        )
        result.empirical_value = search.empirical_value
        result.tolerance = search.tolerance
        result.search_trace = search.search_trace
        if search.note:
            result.note = (result.note + "; " + search.note).strip("; ")
    with RunDir(args) as run:
        run.csv(
            "tradeoff.csv",
            ["kind", "n", "r", "c", "analytic_value", "feasible",
             "sparse_regime", "empirical_value", "target", "note"],
            [(result.kind, args.n, args.r, args.c, result.analytic_value,
              result.feasible, result.sparse_regime,
              result.empirical_value if result.empirical_value is not None else math.nan,
              target if target is not None else math.nan,
              result.note)],
        )
        if result.search_trace:
            run.csv("search_trace.csv", ["intensity", "t_spr"], result.search_trace)
        run.json("summary.json", {
            "analytic_value": result.analytic_value,
            "feasible": result.feasible,
            "detail": {k: format_value(v) for k, v in result.detail.items()},
            "empirical_value": result.empirical_value,
            "note": result.note,
        })
    print(f"{result.kind} threshold: analytic {format_value(result.analytic_value)} "
          f"(feasible={result.feasible})"
          + (f", empirical {format_value(result.empirical_value)}"
             if result.empirical_value is not None else "")
          + (f" [{result.note}]" if result.note else ""))
    return 0


def cmd_ring(args) -> int:
    ns = [int(x) for x in args.n_grid.split(",")]
    rows = experiments.ring_table(ns, args.eps, args.trials,
                                  np.random.default_rng(args.seed),
                                  max_slots=args.max_slots, threads=args.threads)
    with RunDir(args) as run:
        run.csv("ring.csv", ["n", "t_spr", "normalized"],
                [(row.n, row.t_spr, row.normalized) for row in rows])
    for row in rows:
        print(f"n={row.n}: t_spr={format_value(row.t_spr)} "
              f"t_spr/(n ln n)={format_value(row.normalized)}")
    return 0


def cmd_oracle_check(args) -> int:
    report = experiments.oracle_check(np.random.default_rng(args.seed),
                                      fast=args.fast, threads=args.threads)
    with RunDir(args) as run:
        run.json("report.json", {
            name: {"passed": ok, "detail": detail}
            for name, (ok, detail) in report.checks.items()
        })
    for line in report.lines():
        print(line)
    return 0 if report.all_passed else 1


COMMANDS = {
    "spread": cmd_spread,
    "conductance": cmd_conductance,
    "gap-sweep": cmd_gap_sweep,
    "tradeoff": cmd_tradeoff,
    "ring": cmd_ring,
    "oracle-check": cmd_oracle_check,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    if argv and argv[0] in COMMANDS:
        argv = _inject_config(argv)
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ValueError, tradeoff.NonMonotoneError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
