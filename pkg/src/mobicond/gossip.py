"""Move-and-gossip rounds, spreading-time estimation, and the ring baseline.

Each time slot has two phases: every node first moves, then gossips with
exactly one uniformly chosen neighbor of its *new* neighborhood (isolated
nodes idle).  On a contact with exactly one informed endpoint both ends
become informed (push-pull; push-only is available for sensitivity runs).
All contacts of a slot are resolved against the informed set at the start
of the slot, independently per initiating node.

The epsilon-spreading time of a configuration is the worst, over sampled
sources, empirical (1 - epsilon)-quantile of per-trial completion slots.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Snapshot, build_snapshot
from .mobility import MobilitySpec, init_states, move
from .parallel import map_indexed

__all__ = [
    "RoundRecord",
    "RoundTrace",
    "SpreadingResult",
    "make_informed",
    "gossip_round",
    "run_spreading",
    "epsilon_quantile",
    "spreading_time",
    "ring_spreading_time",
    "edge_use_ratio",
]

DEFAULT_MAX_SLOTS = 10**6


@dataclass(frozen=True)
class RoundRecord:
    """Per-slot bookkeeping.

    ``informed`` is the informed count at the start of the slot;
    ``cross_contacts`` counts realized contacts with exactly one informed
    endpoint; ``active_nodes`` is the number of nodes with at least one
    neighbor; ``edges_used`` counts distinct undirected edges carrying a
    contact this slot (never more than ``edges_available``).
    """

    informed: int
    cross_contacts: int
    active_nodes: int
    edges_available: int
    edges_used: int


@dataclass
class RoundTrace:
    """Sequence of per-slot records for one run."""

    records: list[RoundRecord] = field(default_factory=list)

    def append(self, record: RoundRecord) -> None:
        self.records.append(record)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def edges_available_total(self) -> int:
        return sum(rec.edges_available for rec in self.records)

    @property
    def edges_used_total(self) -> int:
        return sum(rec.edges_used for rec in self.records)


@dataclass(frozen=True)
class SpreadingResult:
    """Monte Carlo spreading-time estimate.

    ``completion_times`` has shape (sources_sampled, trials) with ``inf``
    marking runs that did not finish within the slot guard.  ``t_spr`` is
    the max over sources of the per-source (1 - epsilon)-quantile; it is
    ``inf`` when too many runs failed to finish at the requested epsilon.
    """

    epsilon: float
    trials: int
    sources_sampled: int
    sources: tuple[int, ...]
    completion_times: np.ndarray
    t_spr: float
    failed_fraction: float

    @property
    def terminated(self) -> bool:
        return math.isfinite(self.t_spr)


def make_informed(n: int, source: int) -> np.ndarray:
    """Boolean informed-set over node ids with a single source."""
    if not 0 <= source < n:
        raise IndexError(f"source {source} out of range for n={n}")
    informed = np.zeros(n, dtype=bool)
    informed[source] = True
    return informed


def gossip_round(
    snapshot: Snapshot,
    informed: np.ndarray,
    rng,
    push_only: bool = False,
) -> tuple[np.ndarray, RoundRecord]:
    """One gossip phase on a post-move snapshot.

    Returns the new informed set (the input is not modified) and the slot
    record.  Every node with a neighbor contacts exactly one of them with
    probability 1/degree each; the contact distribution of isolated nodes
    has total mass zero.
    """
    rng = np.random.default_rng(rng)
    informed = np.asarray(informed, dtype=bool)
    if informed.shape != (snapshot.n,):
        raise ValueError("informed set size does not match snapshot")
    deg = snapshot.degree
    initiators = np.flatnonzero(deg > 0)
    updated = informed.copy()
    if initiators.size == 0:
        record = RoundRecord(int(informed.sum()), 0, 0, snapshot.num_edges, 0)
        return updated, record

    picks = (rng.random(initiators.size) * deg[initiators]).astype(np.int64)
    targets = snapshot.indices[snapshot.indptr[initiators] + picks]

    updated[targets[informed[initiators]]] = True  # push
    if not push_only:
        updated[initiators[informed[targets]]] = True  # pull

    cross = int(np.count_nonzero(informed[initiators] != informed[targets]))
    lo = np.minimum(initiators, targets)
    hi = np.maximum(initiators, targets)
    used = int(np.unique(lo * snapshot.n + hi).size)
    record = RoundRecord(
        informed=int(informed.sum()),
        cross_contacts=cross,
        active_nodes=int(initiators.size),
        edges_available=snapshot.num_edges,
        edges_used=used,
    )
    return updated, record


def run_spreading(
    n: int,
    r: float,
    spec: MobilitySpec,
    source: int,
    max_slots: int,
    rng,
    push_only: bool = False,
) -> tuple[int | None, RoundTrace]:
    """Alternate move and gossip until everyone is informed.

    Returns the first slot index t with a fully informed set, or ``None``
    if the run did not complete within ``max_slots`` (never silently
    truncated), together with the per-slot trace.
    """
    if max_slots < 0:
        raise ValueError("max_slots must be >= 0")
    rng = np.random.default_rng(rng)
    states = init_states(n, spec, rng)
    informed = make_informed(n, source)
    trace = RoundTrace()
    if informed.all():
        return 0, trace
    for t in range(1, max_slots + 1):
        states = move(states, spec, rng)
        snapshot = build_snapshot(states.positions, r)
        informed, record = gossip_round(snapshot, informed, rng, push_only=push_only)
        trace.append(record)
        if informed.all():
            return t, trace
    return None, trace


def epsilon_quantile(times, epsilon: float) -> float:
    """Empirical epsilon-spreading quantile of completion times.

    Smallest t such that the fraction of runs still incomplete after t is
    at most epsilon; non-terminated runs enter as ``inf``.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    ts = np.sort(np.asarray(times, dtype=float))
    if ts.size == 0:
        raise ValueError("no completion times")
    k = math.ceil((1.0 - epsilon) * ts.size)
    return float(ts[k - 1])


def _spreading_trial(args) -> float:
    n, r, spec, source, max_slots, push_only, stream = args
    done, _ = run_spreading(n, r, spec, source, max_slots, stream, push_only=push_only)
    return float(done) if done is not None else math.inf


def spreading_time(
    n: int,
    r: float,
    spec: MobilitySpec,
    epsilon: float,
    trials: int,
    sources_sampled: int,
    rng,
    max_slots: int = DEFAULT_MAX_SLOTS,
    push_only: bool = False,
    threads: int = 1,
) -> SpreadingResult:
    """Estimate the epsilon-spreading time by Monte Carlo.

    Runs ``trials`` independent runs for each of ``sources_sampled``
    uniformly drawn sources and takes the worst per-source quantile.  Each
    trial consumes its own generator spawned in a fixed order from ``rng``,
    so results do not depend on ``threads``.
    """
    if trials < 1 or sources_sampled < 1:
        raise ValueError("trials and sources_sampled must be >= 1")
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    if sources_sampled > n:
        raise ValueError("cannot sample more distinct sources than nodes")
    rng = np.random.default_rng(rng)
    sources = rng.choice(n, size=sources_sampled, replace=False)
    streams = rng.spawn(sources_sampled * trials)
    jobs = [
        (n, r, spec, int(sources[s]), max_slots, push_only, streams[s * trials + t])
        for s in range(sources_sampled)
        for t in range(trials)
    ]
    flat = map_indexed(_spreading_trial, jobs, threads)
    times = np.asarray(flat, dtype=float).reshape(sources_sampled, trials)
    per_source = [epsilon_quantile(row, epsilon) for row in times]
    failed = float(np.mean(~np.isfinite(times)))
    return SpreadingResult(
        epsilon=epsilon,
        trials=trials,
        sources_sampled=sources_sampled,
        sources=tuple(int(s) for s in sources),
        completion_times=times,
        t_spr=max(per_source),
        failed_fraction=failed,
    )


def _ring_trial(args) -> float:
    n, max_slots, stream = args
    rng = np.random.default_rng(stream)
    informed = make_informed(n, 0)
    if informed.all():
        return 0.0
    idx = np.arange(n)
    for t in range(1, max_slots + 1):
        step = np.where(rng.random(n) < 0.5, 1, -1)
        targets = (idx + step) % n
        updated = informed.copy()
        updated[targets[informed]] = True
        updated[idx[informed[targets]]] = True
        informed = updated
        if informed.all():
            return float(t)
    return math.inf


def ring_spreading_time(
    n: int,
    epsilon: float,
    trials: int,
    rng,
    max_slots: int = DEFAULT_MAX_SLOTS,
    threads: int = 1,
) -> SpreadingResult:
    """Spreading time of randomized gossip on a static n-ring.

    Same contact rule as the mobile engine (each node picks one of its two
    ring neighbors with probability 1/2) and push-pull exchange.  All ring
    nodes are equivalent, so a single source stands in for the sup.
    """
    if n < 2:
        raise ValueError("ring needs at least 2 nodes")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(rng)
    streams = rng.spawn(trials)
    jobs = [(n, max_slots, streams[t]) for t in range(trials)]
    flat = map_indexed(_ring_trial, jobs, threads)
    times = np.asarray(flat, dtype=float).reshape(1, trials)
    failed = float(np.mean(~np.isfinite(times)))
    return SpreadingResult(
        epsilon=epsilon,
        trials=trials,
        sources_sampled=1,
        sources=(0,),
        completion_times=times,
        t_spr=epsilon_quantile(times[0], epsilon),
        failed_fraction=failed,
    )


def edge_use_ratio(trace: RoundTrace) -> float | None:
    """Fraction of available undirected edges actually used, over a trace.

    Returns ``None`` when no edges were available at all (the ratio is
    undefined on an edgeless trace).
    """
    if len(trace) == 0:
        raise ValueError("empty trace")
    available = trace.edges_available_total
    if available == 0:
        return None
    return trace.edges_used_total / available
