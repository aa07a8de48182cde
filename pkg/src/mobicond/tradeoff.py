"""Mobility-connectivity tradeoff thresholds.

How much mobility makes a sparse network (n r^2 well below 1) spread as
fast as the worst-case connected benchmark, a static ring?  Analytically
all three mobility knobs need intensity of order c / (n^2 r^2):

* velocity-constrained: v_max threshold (for v_max > r);
* partially random: mobility ratio k/n, via the contact condition
  k (2n - k) r^2 >= c;
* one-dimensional: mobility balance n_V n_H / n^2, via n_V n_H r^2 >= c.

The order constant ``c`` is user-settable (default 1); empirical searches
calibrate the real crossing against a *measured* ring spreading time so no
unknown constants enter the comparison.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .gossip import DEFAULT_MAX_SLOTS, spreading_time
from .mobility import MobilitySpec

__all__ = [
    "ThresholdResult",
    "NonMonotoneError",
    "velocity_threshold",
    "mobility_ratio_threshold",
    "mobility_balance_threshold",
    "spec_for_intensity",
    "empirical_threshold_search",
]


class NonMonotoneError(RuntimeError):
    """Probe sequence contradicts the assumed decrease of spreading time
    with mobility intensity beyond the allowed noise margin."""

    def __init__(self, message: str, trace: list[tuple[float, float]]):
        super().__init__(message)
        self.trace = trace


@dataclass
class ThresholdResult:
    """Analytic threshold plus optional empirical calibration.

    ``analytic_value`` is the order-form threshold c / (n^2 r^2);
    ``detail`` carries model-specific exact quantities (integer k, minimal
    axis split, ...).  ``feasible`` is False when the analytic value
    exceeds the model's intensity bound; ``sparse_regime`` warns when the
    supplied (n, r) is outside the sparse setting the thresholds assume.
    Empirical searches fill ``empirical_value`` (upper bracket end, within
    ``tolerance`` of the crossing) and the (intensity, t_spr) trace.
    """

    kind: str
    n: int
    r: float
    c: float
    analytic_value: float
    feasible: bool
    sparse_regime: bool
    detail: dict[str, float] = field(default_factory=dict)
    empirical_value: float | None = None
    tolerance: float | None = None
    search_trace: list[tuple[float, float]] = field(default_factory=list)
    note: str = ""


def _base(kind: str, n: int, r: float, c: float) -> ThresholdResult:
    if n < 2 or r <= 0 or c <= 0:
        raise ValueError("need n >= 2, r > 0, c > 0")
    return ThresholdResult(
        kind=kind,
        n=n,
        r=r,
        c=c,
        analytic_value=c / (n * n * r * r),
        feasible=True,
        sparse_regime=n * r * r < 1.0,
    )


def velocity_threshold(n: int, r: float, c: float = 1.0) -> ThresholdResult:
    """Velocity needed to match the ring benchmark: c / (n^2 r^2).

    Infeasible when the value exceeds the speed bound of 1 or when
    n r <= sqrt(c) (transmission range so small that even fully random
    motion cannot reach ring-level spreading time).
    """
    res = _base("velocity", n, r, c)
    res.feasible = res.analytic_value <= 1.0 and n * r > math.sqrt(c)
    if not res.feasible:
        res.note = "threshold at or beyond the v_max <= 1 model bound"
    return res


def mobility_ratio_threshold(n: int, r: float, c: float = 1.0) -> ThresholdResult:
    """Mobile-node ratio k/n needed to match the ring benchmark.

    Also solves the exact contact condition k (2n - k) r^2 = c: ``detail``
    carries the real root ``k_exact``, the minimal integer ``k_min``
    satisfying the condition, and the corresponding ratio.  Infeasible
    when no k in [0, n] satisfies it.
    """
    res = _base("mobility-ratio", n, r, c)
    disc = n * n - c / (r * r)
    if disc < 0:
        res.feasible = False
        res.note = "k(2n-k) r^2 >= c has no solution with k <= n"
        return res
    k_exact = n - math.sqrt(disc)
    k_min = max(1, math.ceil(k_exact - 1e-12))
    res.detail = {
        "k_exact": k_exact,
        "k_min": float(k_min),
        "ratio_exact": k_exact / n,
        "ratio_min": k_min / n,
    }
    return res


def mobility_balance_threshold(n: int, r: float, c: float = 1.0) -> ThresholdResult:
    """Axis balance n_V n_H / n^2 needed to match the ring benchmark.

    Solves n_V (n - n_V) r^2 >= c for the minimal minority side; the
    balanced split maximizes the product at n^2/4, so the condition is
    unsatisfiable when (n/2)^2 r^2 < c.  Both sides must keep growing with
    n whenever r shrinks faster than 1/sqrt(n).
    """
    res = _base("mobility-balance", n, r, c)
    disc = n * n / 4.0 - c / (r * r)
    if disc < 0:
        res.feasible = False
        res.note = "n_V n_H r^2 >= c unsatisfiable even for the balanced split"
        return res
    side_exact = n / 2.0 - math.sqrt(disc)
    side_min = max(1, math.ceil(side_exact - 1e-12))
    res.detail = {
        "min_side_exact": side_exact,
        "min_side": float(side_min),
        "balance_at_min": side_min * (n - side_min) / n**2,
    }
    return res


def spec_for_intensity(kind: str, intensity: float, n: int) -> MobilitySpec:
    """Mobility spec whose intensity knob is set to ``intensity``."""
    if kind in ("velocity", "vc"):
        return MobilitySpec.velocity_constrained(min(max(intensity, 1e-9), 1.0))
    if kind in ("mobility-ratio", "pr"):
        k = int(round(intensity * n))
        return MobilitySpec.partially_random(min(max(k, 0), n))
    if kind in ("mobility-balance", "1d"):
        if not 0.0 <= intensity <= 0.25:
            raise ValueError("mobility balance lies in [0, 0.25]")
        n_v = int(round(n * (0.5 - math.sqrt(max(0.25 - intensity, 0.0)))))
        n_v = min(max(n_v, 0), n)
        return MobilitySpec.one_dimensional(n_v, n - n_v)
    raise ValueError(f"unknown intensity kind {kind!r}")


def _check_monotone(trace: list[tuple[float, float]], margin: float) -> None:
    ordered = sorted(trace)
    for (i_lo, t_lo), (i_hi, t_hi) in zip(ordered, ordered[1:]):
        if math.isinf(t_lo):
            continue
        if t_hi > t_lo * (1.0 + margin):
            raise NonMonotoneError(
                f"t_spr rose from {t_lo:g} at intensity {i_lo:g} to {t_hi:g} "
                f"at intensity {i_hi:g} (allowed margin {margin:.0%})",
                ordered,
            )


def empirical_threshold_search(
    n: int,
    r: float,
    kind: str,
    target: float,
    lo: float,
    hi: float,
    tolerance: float,
    trials: int,
    rng,
    epsilon: float = 0.01,
    max_slots: int = DEFAULT_MAX_SLOTS,
    threads: int = 1,
    monotone_margin: float = 0.35,
) -> ThresholdResult:
    """Bisection search for the intensity whose spreading time meets ``target``.

    Each probe measures the epsilon-spreading time with ``trials`` runs
    (source fixed by node exchangeability).  Maintains a bracket
    [lo: slower than target, hi: at most target] and narrows it to
    ``tolerance``; the returned ``empirical_value`` is the upper end.  If
    the endpoints do not bracket a crossing the result reports the failure
    with both endpoint measurements instead of fabricating a root.  Probe
    monotonicity is verified within ``monotone_margin``; gross violations
    raise :class:`NonMonotoneError`.
    """
    if not 0 < lo < hi:
        raise ValueError("need 0 < lo < hi")
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    rng = np.random.default_rng(rng)
    result = _base(kind if kind in ("velocity", "mobility-ratio", "mobility-balance")
                   else {"vc": "velocity", "pr": "mobility-ratio", "1d": "mobility-balance"}[kind],
                   n, r, 1.0)
    result.tolerance = tolerance
    trace: list[tuple[float, float]] = []

    def probe(intensity: float) -> float:
        spec = spec_for_intensity(kind, intensity, n)
        res = spreading_time(
            n, r, spec, epsilon, trials, 1, rng.spawn(1)[0],
            max_slots=max_slots, threads=threads,
        )
        trace.append((intensity, res.t_spr))
        return res.t_spr

    t_hi = probe(hi)
    if t_hi > target:
        result.note = "bracketing failure: upper bound is still slower than target"
        result.search_trace = sorted(trace)
        return result
    t_lo = probe(lo)
    if t_lo <= target:
        result.note = "bracketing failure: lower bound already meets target"
        result.search_trace = sorted(trace)
        return result

    while hi - lo > tolerance:
        mid = 0.5 * (lo + hi)
        if probe(mid) <= target:
            hi = mid
        else:
            lo = mid
    _check_monotone(trace, monotone_margin)
    result.empirical_value = hi
    result.search_trace = sorted(trace)
    return result
