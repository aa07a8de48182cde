import itertools
import math

import numpy as np
import pytest
import scipy.stats

from mobicond.geometry import build_snapshot
from mobicond.gossip import (
    RoundRecord,
    RoundTrace,
    edge_use_ratio,
    epsilon_quantile,
    gossip_round,
    make_informed,
    ring_spreading_time,
    run_spreading,
    spreading_time,
)
from mobicond.mobility import MobilitySpec


def chain_snapshot():
    # a -- b -- c with only consecutive pairs in range
    pos = np.array([[0.1, 0.5], [0.3, 0.5], [0.5, 0.5]])
    return build_snapshot(pos, 0.25)


def square_ring_snapshot():
    # 4-cycle: corners of a square with diagonal out of range
    pos = np.array([[0.2, 0.2], [0.8, 0.2], [0.8, 0.8], [0.2, 0.8]])
    return build_snapshot(pos, 0.65)


# -----------------------------------------------------------------------------
# gossip_round mechanics
# -----------------------------------------------------------------------------
def test_round_rejects_wrong_size():
    with pytest.raises(ValueError, match="size"):
        gossip_round(chain_snapshot(), np.zeros(5, dtype=bool), 0)


def test_no_informed_contact_leaves_set_unchanged():
    # informed node isolated: nobody can push or pull from it
    pos = np.array([[0.05, 0.05], [0.7, 0.7], [0.75, 0.7], [0.7, 0.75]])
    snap = build_snapshot(pos, 0.1)
    informed = make_informed(4, 0)
    after, record = gossip_round(snap, informed, 99)
    assert np.array_equal(after, informed)
    assert record.cross_contacts == 0


def test_two_nodes_forced_exchange():
    pos = np.array([[0.4, 0.4], [0.45, 0.4]])
    snap = build_snapshot(pos, 0.1)
    for seed in range(25):
        after, record = gossip_round(snap, make_informed(2, 0), seed)
        assert after.all()
        assert record.active_nodes == 2
        assert record.edges_available == 1
        assert record.edges_used == 1


def test_chain_one_round_enumeration():
    # Only b chooses (a or c); a and c are forced onto b.  Enumerating the
    # two joint outcomes: a's push always informs b, c is never informed in
    # the first round because its only neighbor starts uninformed.
    snap = chain_snapshot()
    expected_sets = set()
    for b_choice in (0, 2):
        contacts = [(0, 1), (1, b_choice), (2, 1)]
        informed = {0}
        new = set(informed)
        for i, j in contacts:
            if (i in informed) != (j in informed):
                new.update((i, j))
        expected_sets.add(frozenset(new))
    assert expected_sets == {frozenset({0, 1})}

    for seed in range(50):
        after, _ = gossip_round(snap, make_informed(3, 0), seed)
        assert set(np.flatnonzero(after).tolist()) == {0, 1}


def test_round_monotone_and_bounded_by_cross_contacts():
    rng = np.random.default_rng(5)
    for _ in range(30):
        n = int(rng.integers(5, 60))
        snap = build_snapshot(rng.random((n, 2)), float(rng.uniform(0.05, 0.6)))
        informed = rng.random(n) < 0.3
        if not informed.any():
            informed[0] = True
        after, record = gossip_round(snap, informed, rng)
        assert (after | informed).sum() == after.sum()  # monotone
        assert after.sum() - informed.sum() <= record.cross_contacts
        assert record.edges_used <= record.edges_available


def test_contact_choice_is_uniform():
    # Hub with 3 spokes, hub informed, push only: exactly one spoke gets
    # informed per round, and it must be uniform over the hub's neighbors.
    pos = np.array([[0.5, 0.5], [0.6, 0.5], [0.5, 0.6], [0.4, 0.5]])
    snap = build_snapshot(pos, 0.15)
    rng = np.random.default_rng(17)
    hits = np.zeros(3)
    rounds = 3000
    for _ in range(rounds):
        after, _ = gossip_round(snap, make_informed(4, 0), rng, push_only=True)
        assert after.sum() == 2
        hits += after[1:]
    _, pvalue = scipy.stats.chisquare(hits)
    assert pvalue > 0.001


# -----------------------------------------------------------------------------
# run_spreading
# -----------------------------------------------------------------------------
def test_single_node_completes_at_zero():
    done, trace = run_spreading(1, 0.5, MobilitySpec.fully_random(), 0, 10, 0)
    assert done == 0
    assert len(trace) == 0


def test_complete_graph_is_logarithmic():
    # diameter-radius snapshot = complete graph; push-pull finishes in
    # O(log n) slots
    spec = MobilitySpec.static()
    rng = np.random.default_rng(31)
    times = []
    for _ in range(100):
        done, _ = run_spreading(128, math.sqrt(2), spec, 0, 200, rng)
        times.append(done)
    assert all(t is not None for t in times)
    assert np.median(times) <= 30


def test_static_disconnected_flags_nontermination():
    pos_seed = 1  # static model: initial draw decides connectivity
    spec = MobilitySpec.static()
    # r tiny: with 8 nodes the graph is almost surely disconnected
    done, trace = run_spreading(8, 1e-4, spec, 0, 50, pos_seed)
    assert done is None
    assert len(trace) == 50


def test_run_deterministic():
    spec = MobilitySpec.velocity_constrained(0.25)
    a = run_spreading(40, 0.15, spec, 3, 5000, 123)
    b = run_spreading(40, 0.15, spec, 3, 5000, 123)
    assert a[0] == b[0]
    assert a[1].records == b[1].records


def test_source_validation():
    with pytest.raises(IndexError):
        run_spreading(5, 0.1, MobilitySpec.fully_random(), 5, 10, 0)


# -----------------------------------------------------------------------------
# epsilon quantile and spreading_time
# -----------------------------------------------------------------------------
def test_quantile_limit_is_min():
    times = [7, 3, 9, 5]
    assert epsilon_quantile(times, 0.999) == 3


def test_quantile_small_epsilon_is_max():
    assert epsilon_quantile([7, 3, 9, 5], 1e-6) == 9


def test_quantile_counts_allowed_failures():
    times = list(range(1, 101))
    # eps=0.05 allows 5 of 100 runs above t
    assert epsilon_quantile(times, 0.05) == 95


def test_quantile_rejects_bad_epsilon():
    with pytest.raises(ValueError):
        epsilon_quantile([1.0], 0.0)
    with pytest.raises(ValueError):
        epsilon_quantile([1.0], 1.0)


def test_spreading_time_reproducible_across_seeds():
    # nr^2 = 4/pi: comfortably connected, so two disjoint seeds must agree
    n = 256
    r = math.sqrt(4 / (math.pi * n))
    spec = MobilitySpec.fully_random()
    a = spreading_time(n, r, spec, 0.01, 500, 1, 1000)
    b = spreading_time(n, r, spec, 0.01, 500, 1, 2000)
    assert abs(a.t_spr - b.t_spr) <= 0.1 * max(a.t_spr, b.t_spr)


def test_spreading_time_within_complete_graph_band():
    n = 500
    r = math.sqrt(4 / (math.pi * n))
    spec = MobilitySpec.fully_random()
    res = spreading_time(n, r, spec, 0.01, 100, 1, 77)
    complete = spreading_time(n, math.sqrt(2), MobilitySpec.static(), 0.01, 100, 1, 78)
    assert res.terminated
    assert res.t_spr <= 10 * complete.t_spr


def test_spreading_time_propagates_failures():
    res = spreading_time(8, 1e-4, MobilitySpec.static(), 0.01, 10, 2, 5, max_slots=20)
    assert not res.terminated
    assert res.failed_fraction > 0.5


def test_spreading_time_threads_do_not_change_results():
    spec = MobilitySpec.fully_random()
    a = spreading_time(64, 0.2, spec, 0.05, 24, 2, 42, threads=1)
    b = spreading_time(64, 0.2, spec, 0.05, 24, 2, 42, threads=2)
    assert np.array_equal(a.completion_times, b.completion_times)
    assert a.sources == b.sources


# -----------------------------------------------------------------------------
# edge use ratio
# -----------------------------------------------------------------------------
def test_edge_use_ratio_degree_one_world():
    # two nodes in range: the single edge is used every slot
    pos = np.array([[0.4, 0.4], [0.42, 0.4]])
    snap = build_snapshot(pos, 0.1)
    trace = RoundTrace()
    informed = make_informed(2, 0)
    rng = np.random.default_rng(0)
    for _ in range(5):
        informed, rec = gossip_round(snap, informed, rng)
        trace.append(rec)
    assert edge_use_ratio(trace) == 1.0


def test_edge_use_ratio_complete_graph_counting():
    # On a complete graph each slot selects n directed picks; a specific
    # edge {i,j} goes unused iff neither endpoint picks the other:
    # P(used) = 1 - (1 - 1/(n-1))^2, and the per-slot expected ratio equals
    # that probability.
    n = 6
    pos = np.column_stack([np.linspace(0.4, 0.6, n), np.full(n, 0.5)])
    snap = build_snapshot(pos, 1.0)
    assert snap.num_edges == n * (n - 1) // 2
    expected = 1 - (1 - 1 / (n - 1)) ** 2
    rng = np.random.default_rng(2)
    ratios = []
    for _ in range(4000):
        trace = RoundTrace()
        _, rec = gossip_round(snap, make_informed(n, 0), rng)
        trace.append(rec)
        ratios.append(edge_use_ratio(trace))
    ratios = np.asarray(ratios)
    assert (ratios <= 2 / (n - 1) + 1e-12).all()
    stderr = ratios.std(ddof=1) / math.sqrt(len(ratios))
    assert abs(ratios.mean() - expected) <= 3 * stderr


def test_edge_use_ratio_manual_recount():
    records = [
        RoundRecord(1, 0, 4, 10, 3),
        RoundRecord(3, 2, 4, 8, 2),
        RoundRecord(5, 1, 2, 5, 1),
        RoundRecord(6, 0, 0, 0, 0),
        RoundRecord(6, 0, 6, 7, 4),
    ]
    trace = RoundTrace(records=list(records))
    total_used = 3 + 2 + 1 + 0 + 4
    total_available = 10 + 8 + 5 + 0 + 7
    assert edge_use_ratio(trace) == total_used / total_available


def test_edge_use_ratio_undefined_without_edges():
    trace = RoundTrace(records=[RoundRecord(1, 0, 0, 0, 0)])
    assert edge_use_ratio(trace) is None
    with pytest.raises(ValueError):
        edge_use_ratio(RoundTrace())


# -----------------------------------------------------------------------------
# ring baseline
# -----------------------------------------------------------------------------
def test_ring_two_nodes_one_slot():
    res = ring_spreading_time(2, 0.5, 30, 4)
    assert (res.completion_times == 1.0).all()


def test_ring_single_round_distribution_matches_enumeration():
    # Exhaustive oracle over all 2^4 joint neighbor choices on a 4-cycle
    # with source 0: P(|S1|=2) = P(|S1|=3) = 1/2, |S1|=4 impossible.
    counts = {2: 0, 3: 0, 4: 0}
    for choices in itertools.product((+1, -1), repeat=4):
        informed = {0}
        new = set(informed)
        for i, step in enumerate(choices):
            j = (i + step) % 4
            if (i in informed) != (j in informed):
                new.update((i, j))
        counts[len(new)] += 1
    assert counts == {2: 8, 3: 8, 4: 0}

    # same one-round statistics out of the real engine on a geometric 4-ring
    snap = square_ring_snapshot()
    rng = np.random.default_rng(9)
    sizes = []
    rounds = 4000
    for _ in range(rounds):
        after, _ = gossip_round(snap, make_informed(4, 0), rng)
        sizes.append(int(after.sum()))
    sizes = np.asarray(sizes)
    assert set(np.unique(sizes)) <= {2, 3}
    p3 = (sizes == 3).mean()
    assert abs(p3 - 0.5) <= 3 * math.sqrt(0.25 / rounds)


def test_ring_deterministic():
    a = ring_spreading_time(32, 0.1, 40, 11)
    b = ring_spreading_time(32, 0.1, 40, 11)
    assert np.array_equal(a.completion_times, b.completion_times)


def test_ring_rejects_tiny():
    with pytest.raises(ValueError):
        ring_spreading_time(1, 0.1, 10, 0)
