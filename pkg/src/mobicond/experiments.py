"""Experiment orchestration: sweeps, benchmark tables, and oracle checks.

These are the reusable cores behind the command-line front end; they do no
file I/O themselves.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import conductance as cond
from .geometry import build_snapshot
from .gossip import DEFAULT_MAX_SLOTS, ring_spreading_time, spreading_time
from .mobility import Mobility, MobilitySpec

__all__ = [
    "GapRow",
    "GapSweepResult",
    "RingRow",
    "ConductanceReport",
    "reference_radius",
    "default_nr2_grid",
    "fit_loglog",
    "gap_sweep",
    "ring_table",
    "conductance_report",
    "oracle_check",
    "OracleReport",
]

SPARSE_FIT_CUTOFF = 0.5  # nr^2 below this counts as the disconnected zone


@dataclass(frozen=True)
class GapRow:
    """One sweep point: spreading-time gap between sparse and connected."""

    n: int
    r: float
    nr2: float
    t_spr: float
    t_ref: float
    gap: float


@dataclass(frozen=True)
class GapSweepResult:
    rows: tuple[GapRow, ...]
    r_ref: float
    t_ref: float
    slope: float
    intercept: float

    @property
    def sparse_rows(self) -> tuple[GapRow, ...]:
        return tuple(row for row in self.rows
                     if row.nr2 < SPARSE_FIT_CUTOFF and math.isfinite(row.t_spr))


@dataclass(frozen=True)
class RingRow:
    n: int
    t_spr: float
    normalized: float  # t_spr / (n ln n)


@dataclass(frozen=True)
class ConductanceReport:
    estimate: cond.ConductanceEstimate
    closed_form: float | None  # fully random prediction, when applicable
    agrees: bool | None        # |mean - closed_form| <= 3 stderr
    note: str = ""


def reference_radius(n: int) -> float:
    """Connected reference: the radius with n pi r^2 = 2 ln n.

    Comfortably above the connectivity threshold of the random geometric
    graph, and documented as this package's convention.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    return math.sqrt(2.0 * math.log(n) / (math.pi * n))


def default_nr2_grid(lo: float = 0.05, hi: float = 8.0, points: int = 15) -> np.ndarray:
    """Geometric n r^2 grid spanning the sparse through connected zones."""
    if not 0 < lo < hi or points < 2:
        raise ValueError("need 0 < lo < hi and points >= 2")
    return np.geomspace(lo, hi, points)


def fit_loglog(xs, ys) -> tuple[float, float]:
    """Least-squares slope and intercept of log(y) against log(x)."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size < 2:
        raise ValueError("need at least two points to fit")
    if (xs <= 0).any() or (ys <= 0).any():
        raise ValueError("log-log fit needs positive data")
    slope, intercept = np.polyfit(np.log(xs), np.log(ys), 1)
    return float(slope), float(intercept)


def gap_sweep(
    n: int,
    nr2_grid,
    spec: MobilitySpec,
    epsilon: float,
    trials: int,
    rng,
    sources_sampled: int = 1,
    max_slots: int = DEFAULT_MAX_SLOTS,
    threads: int = 1,
) -> GapSweepResult:
    """Measure the spreading-time gap across an n r^2 grid.

    The reference time is measured at :func:`reference_radius`; each grid
    point reports gap = t_ref / t_spr, which grows with n r^2 in the
    disconnected zone and saturates near 1 once connected.  Non-terminating
    grid points yield an infinite t_spr (gap 0) and the sweep continues.
    """
    rng = np.random.default_rng(rng)
    r_ref = reference_radius(n)
    ref = spreading_time(
        n, r_ref, spec, epsilon, trials, sources_sampled, rng.spawn(1)[0],
        max_slots=max_slots, threads=threads,
    )
    rows = []
    for nr2 in np.asarray(nr2_grid, dtype=float):
        r = math.sqrt(nr2 / n)
        res = spreading_time(
            n, r, spec, epsilon, trials, sources_sampled, rng.spawn(1)[0],
            max_slots=max_slots, threads=threads,
        )
        gap = ref.t_spr / res.t_spr if math.isfinite(res.t_spr) else 0.0
        rows.append(GapRow(n=n, r=r, nr2=float(nr2), t_spr=res.t_spr,
                           t_ref=ref.t_spr, gap=gap))
    sparse = [(row.nr2, row.gap) for row in rows
              if row.nr2 < SPARSE_FIT_CUTOFF and row.gap > 0]
    if len(sparse) >= 2:
        slope, intercept = fit_loglog([p[0] for p in sparse], [p[1] for p in sparse])
    else:
        slope, intercept = math.nan, math.nan
    return GapSweepResult(rows=tuple(rows), r_ref=r_ref, t_ref=ref.t_spr,
                          slope=slope, intercept=intercept)


def ring_table(ns, epsilon: float, trials: int, rng,
               max_slots: int = DEFAULT_MAX_SLOTS, threads: int = 1) -> list[RingRow]:
    """Ring benchmark across a grid of sizes, normalized by n ln n."""
    rng = np.random.default_rng(rng)
    rows = []
    for n in ns:
        res = ring_spreading_time(int(n), epsilon, trials, rng.spawn(1)[0],
                                  max_slots=max_slots, threads=threads)
        rows.append(RingRow(n=int(n), t_spr=res.t_spr,
                            normalized=res.t_spr / (n * math.log(n))))
    return rows


def conductance_report(
    n: int,
    r: float,
    spec: MobilitySpec,
    cut_rule,
    samples: int,
    rng,
    threads: int = 1,
) -> ConductanceReport:
    """Conductance estimate plus the closed-form column when it applies.

    For fully random motion the closed form is the exact bisection
    prediction; agreement is flagged at 3 standard errors.  A static model
    whose estimate is consistent with zero is annotated: with no mobility a
    disconnected draw may never carry flow across the cut, so the expected
    meeting time may be infinite.
    """
    est = cond.estimate_conductance(n, r, spec, cut_rule=cut_rule,
                                    samples=samples, rng=rng, threads=threads)
    closed = None
    agrees = None
    note = ""
    if spec.kind is Mobility.FULLY_RANDOM:
        closed = cond.fr_closed_form(n, r).exact
        agrees = abs(est.mean - closed) <= 3.0 * est.stderr
    if spec.kind is Mobility.STATIC and est.mean <= max(3.0 * est.stderr, 1e-9):
        note = "expected-meeting-time may be infinite"
    return ConductanceReport(estimate=est, closed_form=closed, agrees=agrees, note=note)


@dataclass
class OracleReport:
    """Machine-readable pass/fail per conductance invariant."""

    checks: dict[str, tuple[bool, str]] = field(default_factory=dict)

    def record(self, name: str, passed: bool, detail: str) -> None:
        self.checks[name] = (bool(passed), detail)

    @property
    def all_passed(self) -> bool:
        return all(ok for ok, _ in self.checks.values())

    def lines(self) -> list[str]:
        return [f"{'PASS' if ok else 'FAIL'} {name}: {detail}"
                for name, (ok, detail) in self.checks.items()]


def triple_sum_cut_flow(n: int, r: float, s: int) -> float:
    """Expected cut flow summed over the full binomial chain.

    Independent route to the closed collapse in
    :func:`mobicond.conductance.fr_expected_cut_flow`: sums the degree law
    against the expected cross fraction, term by term.
    """
    s_bar_frac = (n - s) / (n - 1)
    total = 0.0
    for m in range(1, n):
        b = np.arange(0, m + 1)
        inner = float((b / m * cond.fr_cross_pmf(m, b, s_bar_frac)).sum())
        total += float(cond.fr_degree_pmf(n, r, m)) * inner
    return s * total


def oracle_check(rng, fast: bool = False, threads: int = 1) -> OracleReport:
    """Run every conductance-module invariant and report pass/fail.

    ``fast`` shrinks Monte Carlo sizes for smoke testing; the release gate
    runs with the defaults.
    """
    rng = np.random.default_rng(rng)
    report = OracleReport()

    # flow-bound: samples of the flow and estimates stay within [0, 1]
    worst_lo, worst_hi = math.inf, -math.inf
    for _ in range(20 if fast else 100):
        n = int(rng.integers(4, 40))
        pos = rng.random((n, 2))
        snap = build_snapshot(pos, float(rng.uniform(0.05, 1.0)))
        size = int(rng.integers(1, n // 2 + 1))
        cut = cond.Cut.from_ids(rng.choice(n, size=size, replace=False), n)
        value = cond.cut_flow(snap, cut)
        worst_lo = min(worst_lo, value)
        worst_hi = max(worst_hi, value)
    report.record("flow-bound", 0.0 <= worst_lo and worst_hi <= 1.0,
                  f"flow samples within [{worst_lo:.3g}, {worst_hi:.3g}]")

    # closed-form-monotonic: nondecreasing in both n and r
    ns = np.arange(2, 200, 3)
    rs = np.linspace(1e-3, math.sqrt(2), 120)
    in_n = all(cond.fr_closed_form(int(a), 0.03).exact <= cond.fr_closed_form(int(b), 0.03).exact + 1e-15
               for a, b in zip(ns, ns[1:]))
    in_r = all(cond.fr_closed_form(100, float(a)).exact <= cond.fr_closed_form(100, float(b)).exact + 1e-15
               for a, b in zip(rs, rs[1:]))
    report.record("closed-form-monotonic", in_n and in_r,
                  f"nondecreasing in n: {in_n}, in r: {in_r}")

    # binomial-chain-identity: collapsed flow equals the explicit triple sum
    worst_rel = 0.0
    points = 20 if fast else 100
    for _ in range(points):
        n = int(rng.integers(2, 301))
        s = int(rng.integers(1, max(n // 2, 1) + 1))
        r = float(rng.uniform(1e-3, 0.2))
        lhs = cond.fr_expected_cut_flow(n, r, s)
        rhs = triple_sum_cut_flow(n, r, s)
        if rhs != 0:
            worst_rel = max(worst_rel, abs(lhs - rhs) / abs(rhs))
    report.record("binomial-chain-identity", worst_rel <= 1e-9,
                  f"worst relative error {worst_rel:.2e} over {points} points")

    # oracle-dominance: exhaustive minimum never exceeds the bisection cut
    n_bf, r_bf = 10, math.sqrt(0.02 / math.pi)
    spec = MobilitySpec.fully_random()
    brute = cond.brute_force_conductance(n_bf, r_bf, spec,
                                         samples_per_cut=150 if fast else 400,
                                         rng=rng.spawn(1)[0])
    bisect = cond.estimate_conductance(n_bf, r_bf, spec, samples=800 if fast else 3000,
                                       rng=rng.spawn(1)[0], threads=threads)
    margin = 3.0 * math.hypot(brute.estimate.stderr, bisect.stderr)
    dominated = brute.estimate.mean <= bisect.mean + margin
    report.record("oracle-dominance", dominated,
                  f"brute {brute.estimate.mean:.4f} vs bisection {bisect.mean:.4f} "
                  f"(+{margin:.4f} allowed)")

    # cut-size-argmin: the minimizing cut takes the largest admissible size
    argmin_ok = True
    argmin_detail = []
    for n_small in (6, 8):
        res = cond.brute_force_conductance(n_small, r_bf, spec,
                                           samples_per_cut=150 if fast else 400,
                                           rng=rng.spawn(1)[0])
        argmin_ok = argmin_ok and res.minimizing_size == n_small // 2
        argmin_detail.append(f"n={n_small}: |S'|={res.minimizing_size}")
    report.record("cut-size-argmin", argmin_ok, ", ".join(argmin_detail))

    # penalty-linearity: sparse/connected estimate ratios track the closed form
    n_pen = 200
    r_ref = reference_radius(n_pen)
    samples = 600 if fast else 2500
    ref_est = cond.estimate_conductance(n_pen, r_ref, spec, samples=samples,
                                        rng=rng.spawn(1)[0], threads=threads)
    ratios, predicted, grid = [], [], [0.02, 0.04, 0.08, 0.16]
    for nr2 in grid:
        r = math.sqrt(nr2 / n_pen)
        est = cond.estimate_conductance(n_pen, r, spec, samples=samples,
                                        rng=rng.spawn(1)[0], threads=threads)
        ratios.append(est.mean / ref_est.mean)
        predicted.append(cond.fr_closed_form(n_pen, r).exact
                         / cond.fr_closed_form(n_pen, r_ref).exact)
    track = max(abs(a - b) / b for a, b in zip(ratios, predicted)) <= 0.10
    slope, _ = fit_loglog(grid, ratios)
    pred_slope, _ = fit_loglog(grid, predicted)
    linear = abs(slope - pred_slope) <= 0.2 * pred_slope
    report.record("penalty-linearity", track and linear,
                  f"ratio deviation <=10%: {track}; slope {slope:.3f} vs "
                  f"predicted {pred_slope:.3f}")

    # vc-doubling: sparse conductance doubles with the velocity bound
    n_vc = 400
    r_vc = math.sqrt(0.1 / n_vc)
    samples_vc = 800 if fast else 3000
    lo = cond.estimate_conductance(n_vc, r_vc, MobilitySpec.velocity_constrained(0.1),
                                   samples=samples_vc, rng=rng.spawn(1)[0], threads=threads)
    hi = cond.estimate_conductance(n_vc, r_vc, MobilitySpec.velocity_constrained(0.2),
                                   samples=samples_vc, rng=rng.spawn(1)[0], threads=threads)
    ratio = hi.mean / lo.mean
    report.record("vc-doubling", 1.6 <= ratio <= 2.4,
                  f"conductance ratio at doubled v_max: {ratio:.3f}")

    return report
