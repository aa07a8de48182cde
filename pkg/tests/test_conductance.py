import math

import numpy as np
import pytest
import scipy.stats

from mobicond.conductance import (
    BRUTE_FORCE_MAX_N,
    Cut,
    bisection_cut,
    brute_force_conductance,
    cut_flow,
    estimate_conductance,
    fr_closed_form,
    fr_contact_prob,
    fr_cross_pmf,
    fr_degree_pmf,
    fr_expected_cut_flow,
    meaningful_contact_prob,
    right_origin_density,
    scaling_class,
)
from mobicond.geometry import build_snapshot, sample_uniform_positions
from mobicond.mobility import MobilitySpec, init_states


def pi_r2_radius(pi_r2: float) -> float:
    return math.sqrt(pi_r2 / math.pi)


# -----------------------------------------------------------------------------
# Cut
# -----------------------------------------------------------------------------
def test_cut_rejects_empty_and_oversized():
    with pytest.raises(ValueError, match="at least one"):
        Cut(np.zeros(6, dtype=bool))
    with pytest.raises(ValueError, match="exceeds"):
        Cut.from_ids([0, 1, 2, 3], 6)


def test_cut_from_ids():
    cut = Cut.from_ids([1, 4], 8)
    assert cut.size == 2 and cut.n == 8
    assert cut.mask[1] and cut.mask[4]


# -----------------------------------------------------------------------------
# cut_flow
# -----------------------------------------------------------------------------
def test_cut_flow_no_cross_edges():
    # both members' neighbors stay inside the cut
    pos = np.array([[0.1, 0.1], [0.12, 0.1], [0.9, 0.9], [0.88, 0.9]])
    snap = build_snapshot(pos, 0.05)
    assert cut_flow(snap, Cut.from_ids([0, 1], 4)) == 0.0


def test_cut_flow_single_outside_neighbor():
    # member 0's only neighbor is outside: contributes 1, normalized by |S'|=1
    pos = np.array([[0.1, 0.1], [0.12, 0.1], [0.9, 0.9]])
    snap = build_snapshot(pos, 0.05)
    assert cut_flow(snap, Cut.from_ids([0], 3)) == 1.0


def test_cut_flow_isolated_member_contributes_zero():
    pos = np.array([[0.1, 0.1], [0.9, 0.9], [0.88, 0.9]])
    snap = build_snapshot(pos, 0.05)
    assert cut_flow(snap, Cut.from_ids([0], 3)) == 0.0


@pytest.mark.parametrize("seed", range(5))
def test_cut_flow_matches_double_loop(seed):
    rng = np.random.default_rng(seed)
    n = 12
    pos = rng.random((n, 2))
    r = float(rng.uniform(0.15, 0.7))
    snap = build_snapshot(pos, r)
    members = rng.choice(n, size=int(rng.integers(1, n // 2 + 1)), replace=False)
    cut = Cut.from_ids(members, n)

    total = 0.0
    member_set = set(members.tolist())
    for i in member_set:
        nbrs = [j for j in range(n) if j != i
                and np.linalg.norm(pos[i] - pos[j]) <= r]
        if nbrs:
            total += sum(1 for j in nbrs if j not in member_set) / len(nbrs)
    expected = total / len(member_set)
    assert cut_flow(snap, cut) == pytest.approx(expected, abs=1e-12)


def test_cut_flow_bounded():
    rng = np.random.default_rng(123)
    for _ in range(50):
        n = int(rng.integers(4, 50))
        snap = build_snapshot(rng.random((n, 2)), float(rng.uniform(0.05, 1.0)))
        cut = Cut.from_ids(rng.choice(n, size=n // 2, replace=False), n)
        assert 0.0 <= cut_flow(snap, cut) <= 1.0


# -----------------------------------------------------------------------------
# bisection cut
# -----------------------------------------------------------------------------
def test_bisection_clear_split():
    pos = np.array([[0.1, 0.5], [0.2, 0.5], [0.8, 0.5], [0.9, 0.5]])
    cut = bisection_cut(pos)
    assert set(np.flatnonzero(cut.mask).tolist()) == {0, 1}


def test_bisection_all_tied():
    pos = np.full((6, 2), 0.5)
    cut = bisection_cut(pos)
    assert cut.size == 3
    assert set(np.flatnonzero(cut.mask).tolist()) == {0, 1, 2}  # id tie-break


def test_bisection_odd_count():
    pos = sample_uniform_positions(7, 3)
    assert bisection_cut(pos).size == 3


def test_bisection_accepts_states():
    states = init_states(10, MobilitySpec.fully_random(), 5)
    cut = bisection_cut(states)
    assert cut.size == 5


# -----------------------------------------------------------------------------
# estimate_conductance
# -----------------------------------------------------------------------------
def test_estimate_static_complete_graph_exact():
    # r = sqrt(2): complete graph; every sample evaluates |outside|/(n-1)
    n = 20
    spec = MobilitySpec.static()
    est = estimate_conductance(n, math.sqrt(2), spec, samples=50, rng=1)
    assert est.mean == pytest.approx(10 / 19, abs=1e-12)
    assert est.stderr == pytest.approx(0.0, abs=1e-12)


def test_estimate_matches_closed_form_at_modest_precision():
    # Hard walls depress the idealized pi r^2 contact chain by ~2%; at 100
    # samples the Monte Carlo tolerance still covers the prediction.
    n = 200
    spec = MobilitySpec.fully_random()
    est = estimate_conductance(n, pi_r2_radius(0.005), spec, samples=100, rng=0)
    cf = fr_closed_form(n, pi_r2_radius(0.005)).exact
    assert abs(est.mean - cf) <= 3 * est.stderr


def test_estimate_stderr_scales_inverse_sqrt():
    n = 100
    spec = MobilitySpec.fully_random()
    small = estimate_conductance(n, 0.05, spec, samples=1000, rng=7)
    large = estimate_conductance(n, 0.05, spec, samples=4000, rng=8)
    assert large.stderr / small.stderr == pytest.approx(0.5, rel=0.2)


def test_estimate_explicit_cut_and_threads_determinism():
    n = 30
    spec = MobilitySpec.fully_random()
    cut = Cut.from_ids(range(15), n)
    a = estimate_conductance(n, 0.2, spec, cut_rule=cut, samples=600, rng=13, threads=1)
    b = estimate_conductance(n, 0.2, spec, cut_rule=cut, samples=600, rng=13, threads=2)
    assert a.mean == b.mean and a.stderr == b.stderr
    assert a.cut_kind == "explicit"


def test_estimate_rejects_bad_rule():
    with pytest.raises(ValueError, match="cut rule"):
        estimate_conductance(10, 0.1, MobilitySpec.fully_random(), cut_rule="median")


# -----------------------------------------------------------------------------
# brute force
# -----------------------------------------------------------------------------
def test_brute_force_guard():
    with pytest.raises(ValueError, match="limited to"):
        brute_force_conductance(BRUTE_FORCE_MAX_N + 1, 0.1, MobilitySpec.fully_random())


def test_brute_force_two_nodes_contact_prob():
    # n=2: the only cuts are singletons and the flow is 1 exactly when the
    # two nodes meet, so the mean estimates the pairwise contact probability.
    r = pi_r2_radius(0.01)
    res = brute_force_conductance(2, r, MobilitySpec.fully_random(),
                                  samples_per_cut=4000, rng=3)
    assert abs(res.estimate.mean - 0.01) <= 3 * res.estimate.stderr


def test_brute_force_min_below_bisection():
    spec = MobilitySpec.fully_random()
    r = pi_r2_radius(0.02)
    brute = brute_force_conductance(10, r, spec, samples_per_cut=600, rng=5)
    bisect = estimate_conductance(10, r, spec, samples=3000, rng=6)
    slack = 3 * math.hypot(brute.estimate.stderr, bisect.stderr)
    assert brute.estimate.mean <= bisect.mean + slack


@pytest.mark.parametrize("n", [6, 8, 10])
def test_brute_force_argmin_takes_largest_size(n):
    res = brute_force_conductance(n, pi_r2_radius(0.02), MobilitySpec.fully_random(),
                                  samples_per_cut=400, rng=n)
    assert res.minimizing_size == n // 2


def test_brute_force_agrees_with_closed_form():
    r = pi_r2_radius(0.02)
    res = brute_force_conductance(10, r, MobilitySpec.fully_random(),
                                  samples_per_cut=150, rng=2)
    cf = fr_closed_form(10, r).exact
    assert abs(res.estimate.mean - cf) <= 3 * res.estimate.stderr


# -----------------------------------------------------------------------------
# closed-form chain
# -----------------------------------------------------------------------------
def test_contact_prob_identity_and_clamp():
    assert fr_contact_prob(pi_r2_radius(0.01)) == pytest.approx(0.01)
    assert fr_contact_prob(math.sqrt(2)) == 1.0
    with pytest.raises(ValueError):
        fr_contact_prob(0.0)


def test_contact_prob_empirical_interior_corrected():
    # Pairwise frequency, conditioned on the first point's disk staying
    # inside the square so wall clipping cannot bias the count.
    r = 0.1
    p = math.pi * r * r
    rng = np.random.default_rng(44)
    first = rng.uniform(r, 1 - r, size=(400_000, 2))
    second = rng.random((400_000, 2))
    hits = (np.linalg.norm(first - second, axis=1) <= r).mean()
    stderr = math.sqrt(p * (1 - p) / 400_000)
    assert abs(hits - p) <= 3 * stderr


def test_degree_pmf_normalizes_and_degenerates():
    n = 40
    pmf = fr_degree_pmf(n, 0.08, np.arange(n))
    assert pmf.sum() == pytest.approx(1.0, abs=1e-12)
    tiny = fr_degree_pmf(n, 1e-12, np.arange(n))
    assert tiny[0] == pytest.approx(1.0, abs=1e-9)


def test_degree_pmf_matches_interior_histogram():
    # Degree of one interior-conditioned node is Binomial(n-1, pi r^2).
    n = 300
    pi_r2 = 0.01
    r = pi_r2_radius(pi_r2)
    rng = np.random.default_rng(11)
    degrees = []
    for _ in range(10_000):
        pos = rng.random((n, 2))
        if not ((pos[0] >= r).all() and (pos[0] <= 1 - r).all()):
            continue
        d = np.linalg.norm(pos[1:] - pos[0], axis=1)
        degrees.append(int((d <= r).sum()))
    degrees = np.asarray(degrees)
    # bins 0..7 individually (mean degree ~3), everything above pooled
    edge = 8
    observed = np.bincount(np.minimum(degrees, edge), minlength=edge + 1).astype(float)
    probs = fr_degree_pmf(n, r, np.arange(edge + 1)).astype(float)
    probs[edge] = 1.0 - probs[:edge].sum()
    expected = probs * len(degrees)
    assert (expected >= 5).all()
    _, pvalue = scipy.stats.chisquare(observed, expected)
    assert pvalue > 0.001


def test_cross_pmf_cases():
    assert fr_cross_pmf(5, 0, 0.0) == pytest.approx(1.0)
    pmf = fr_cross_pmf(3, np.arange(4), 0.5)
    assert np.allclose(pmf, [1 / 8, 3 / 8, 3 / 8, 1 / 8])
    b = np.arange(8)
    assert float((b * fr_cross_pmf(7, b, 0.3)).sum()) == pytest.approx(7 * 0.3)
    with pytest.raises(ValueError):
        fr_cross_pmf(3, 1, 1.5)


def test_expected_cut_flow_examples():
    assert fr_expected_cut_flow(2, pi_r2_radius(0.1), 1) == pytest.approx(0.1)
    assert fr_expected_cut_flow(50, 1e-9, 10) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        fr_expected_cut_flow(10, 0.1, 10)


def test_closed_form_values():
    # saturation: reach the whole square -> complete graph factor
    cf = fr_closed_form(1000, math.sqrt(2))
    assert cf.half == pytest.approx(0.5)
    assert cf.exact == pytest.approx(500 / 999)
    # n pi r^2 = 1: the survival factor is (1 - 1/1000)^999
    cf = fr_closed_form(1000, pi_r2_radius(1e-3))
    survival = (1 - 1e-3) ** 999
    assert cf.half == pytest.approx(0.5 * (1 - survival), rel=1e-12)
    assert cf.half == pytest.approx(0.5 * (1 - math.exp(-1)), abs=2e-4)
    assert cf.exact == pytest.approx((500 / 999) * (1 - survival), rel=1e-12)


def test_closed_form_monotone():
    rs = np.linspace(0.01, 1.0, 50)
    vals = [fr_closed_form(100, float(r)).exact for r in rs]
    assert all(a <= b + 1e-15 for a, b in zip(vals, vals[1:]))
    ns = range(2, 300, 7)
    vals = [fr_closed_form(n, 0.05).exact for n in ns]
    assert all(a <= b + 1e-15 for a, b in zip(vals, vals[1:]))


# -----------------------------------------------------------------------------
# meaningful contact probability
# -----------------------------------------------------------------------------
def test_density_profile_limits():
    assert right_origin_density(-0.2, 0.2) == pytest.approx(0.0)
    assert right_origin_density(0.2, 0.2) == pytest.approx(1.0)
    assert right_origin_density(0.0, 0.2) == pytest.approx(0.5)
    xs = np.linspace(-0.3, 0.3, 61)
    dens = right_origin_density(xs, 0.2)
    assert (np.diff(dens) >= -1e-12).all()


def test_density_profile_matches_direct_simulation():
    # Fraction of uniform-in-disk movers from the right half landing at
    # offset <= x equals the segment-area profile; sample origins instead.
    v = 0.3
    rng = np.random.default_rng(99)
    origin_x = rng.uniform(-2 * v, 2 * v, 500_000)
    rad = v * np.sqrt(rng.random(500_000))
    ang = 2 * np.pi * rng.random(500_000)
    dest = origin_x + rad * np.cos(ang)
    for x in (-0.15, 0.0, 0.12):
        window = np.abs(dest - x) < 0.01
        frac_right = (origin_x[window] > 0).mean()
        # local mixture: density of right origins over total (both uniform)
        assert abs(frac_right - right_origin_density(x, v)) < 0.02


def test_meaningful_contact_support():
    v, r = 0.2, 0.1
    res = meaningful_contact_prob(-v - r - 0.01, r, v, samples=5000, rng=1)
    assert res.mean == 0.0
    res = meaningful_contact_prob(-v - r + 0.02, r, v, samples=20000, rng=2)
    assert res.mean > 0.0


def test_meaningful_contact_symmetric_center():
    res = meaningful_contact_prob(0.0, 0.07, 0.25, samples=40000, rng=3)
    assert abs(res.mean - 0.5) <= 3 * res.stderr


def test_meaningful_contact_continuous_across_case_split():
    # approaching r = v_max from the r < v side and the r > v side
    v = 0.2
    l = -0.05
    below = meaningful_contact_prob(l, v * 0.98, v, samples=60000, rng=4)
    above = meaningful_contact_prob(l, v * 1.02, v, samples=60000, rng=5)
    assert abs(below.mean - above.mean) <= 3 * math.hypot(below.stderr, above.stderr) + 0.01


def test_meaningful_contact_validation():
    with pytest.raises(ValueError):
        meaningful_contact_prob(0.0, -0.1, 0.2)
    with pytest.raises(ValueError):
        meaningful_contact_prob(0.0, 0.1, 0.2, samples=1)


# -----------------------------------------------------------------------------
# scaling classes
# -----------------------------------------------------------------------------
def test_scaling_fully_random():
    sc = scaling_class(MobilitySpec.fully_random(), 500, math.sqrt(0.01 / 500))
    assert sc.regime == "sparse"
    assert sc.value == pytest.approx(0.01)
    sc = scaling_class(MobilitySpec.fully_random(), 500, 0.2)
    assert sc.regime == "connected"
    assert sc.value == 1.0


def test_scaling_pr_static_limit():
    n, r = 400, 0.01
    sc = scaling_class(MobilitySpec.partially_random(0), n, r)
    assert sc.value == pytest.approx(n * r**3)
    static = scaling_class(MobilitySpec.static(), n, r)
    assert static.value == sc.value


def test_scaling_vc_small_velocity():
    n, r = 400, 0.01
    sc = scaling_class(MobilitySpec.velocity_constrained(0.005), n, r)
    assert sc.value == pytest.approx(n * r**2 * r)  # max(v, r) = r


def test_scaling_1d_balance_term():
    n = 400
    r = 0.01
    sc = scaling_class(MobilitySpec.one_dimensional(200, 200), n, r)
    assert sc.value == pytest.approx(0.5 * n * r**3 + 100 * r * r)
