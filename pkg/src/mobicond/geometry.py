"""Unit-square geometry: uniform point sampling and radius-r neighbor queries.

Nodes live on the closed unit square with hard walls (no wrap-around).
Neighborhoods are closed Euclidean balls of radius ``r``; a node is never
its own neighbor.  Queries are answered by a uniform grid whose cell side
is at least ``r``, so each lookup inspects at most 9 cells.
"""
from __future__ import annotations

import math

import numpy as np

__all__ = ["sample_uniform_positions", "build_snapshot", "neighbors", "Snapshot"]

MAX_RADIUS = math.sqrt(2.0)


def sample_uniform_positions(n: int, rng) -> np.ndarray:
    """Draw ``n`` independent uniform points on the unit square.

    Returns an ``(n, 2)`` float array.  Deterministic for a given seed or
    generator state.
    """
    if n < 1:
        raise ValueError(f"need at least one node, got n={n}")
    rng = np.random.default_rng(rng)
    return rng.random((n, 2))


class Snapshot:
    """Immutable node positions plus the radius-``r`` contact graph.

    Adjacency is stored in CSR form (``indptr``/``indices``); ``degree[i]``
    counts neighbors of node ``i``.  Instances are safe to share across
    worker processes once built.
    """

    __slots__ = ("positions", "radius", "n", "indptr", "indices", "degree")

    def __init__(self, positions: np.ndarray, radius: float):
        positions = np.asarray(positions, dtype=np.float64)
        if positions.ndim != 2 or positions.shape[1] != 2 or positions.shape[0] < 1:
            raise ValueError("positions must be a non-empty (n, 2) array")
        if not (0.0 < radius <= MAX_RADIUS):
            raise ValueError(f"radius must lie in (0, sqrt(2)], got {radius}")
        if positions.min() < 0.0 or positions.max() > 1.0:
            raise ValueError("positions must lie within the unit square")
        self.positions = positions
        self.positions.setflags(write=False)
        self.radius = float(radius)
        self.n = positions.shape[0]
        self.indptr, self.indices = _grid_adjacency(positions, self.radius)
        self.degree = np.diff(self.indptr)
        for arr in (self.indptr, self.indices, self.degree):
            arr.setflags(write=False)

    def neighbors(self, i: int) -> np.ndarray:
        """All node ids within distance ``radius`` of node ``i`` (excluding ``i``).

        Returned sorted ascending; treat as a set.
        """
        if not 0 <= i < self.n:
            raise IndexError(f"node id {i} out of range for n={self.n}")
        nbrs = self.indices[self.indptr[i]:self.indptr[i + 1]]
        return np.sort(nbrs)

    @property
    def num_edges(self) -> int:
        """Number of undirected contact edges."""
        return int(self.indices.size // 2)

    def adjacency_dense(self) -> np.ndarray:
        """Dense boolean adjacency matrix; only sensible for small n."""
        a = np.zeros((self.n, self.n), dtype=bool)
        rows = np.repeat(np.arange(self.n), self.degree)
        a[rows, self.indices] = True
        return a


def build_snapshot(positions: np.ndarray, r: float) -> Snapshot:
    """Index ``positions`` for radius-``r`` neighbor queries."""
    return Snapshot(positions, r)


def neighbors(snapshot: Snapshot, i: int) -> np.ndarray:
    """Module-level alias for :meth:`Snapshot.neighbors`."""
    return snapshot.neighbors(i)


def _grid_adjacency(pos: np.ndarray, r: float) -> tuple[np.ndarray, np.ndarray]:
    """CSR adjacency of the closed r-ball graph via a uniform grid.

    The cell side ``1/side`` is >= r, so candidate neighbors of a node are
    confined to its own cell and the 8 surrounding ones.  The axis count is
    additionally capped at ~2 sqrt(n): finer grids than one point per few
    cells only cost memory.  Every ordered pair is produced exactly once
    (for the offset matching the pair's cell delta).
    """
    n = pos.shape[0]
    side = max(1, min(int(1.0 / r), 2 * int(math.sqrt(n)) + 1))
    cx = np.minimum((pos[:, 0] * side).astype(np.int64), side - 1)
    cy = np.minimum((pos[:, 1] * side).astype(np.int64), side - 1)
    cell = cx * side + cy
    order = np.argsort(cell, kind="stable")
    counts = np.bincount(cell, minlength=side * side)
    starts = np.concatenate(([0], np.cumsum(counts)))

    r2 = r * r
    src_parts: list[np.ndarray] = []
    dst_parts: list[np.ndarray] = []
    for dx in (-1, 0, 1):
        for dy in (-1, 0, 1):
            tx = cx + dx
            ty = cy + dy
            valid = (tx >= 0) & (tx < side) & (ty >= 0) & (ty < side)
            src = np.flatnonzero(valid)
            if src.size == 0:
                continue
            tcell = tx[src] * side + ty[src]
            lo = starts[tcell]
            cnt = starts[tcell + 1] - lo
            total = int(cnt.sum())
            if total == 0:
                continue
            rep_src = np.repeat(src, cnt)
            run_start = np.cumsum(cnt) - cnt
            flat = np.arange(total) + np.repeat(lo - run_start, cnt)
            cand = order[flat]
            d = pos[rep_src] - pos[cand]
            keep = (d[:, 0] * d[:, 0] + d[:, 1] * d[:, 1] <= r2) & (rep_src != cand)
            src_parts.append(rep_src[keep])
            dst_parts.append(cand[keep])

    if src_parts:
        i_dir = np.concatenate(src_parts)
        j_dir = np.concatenate(dst_parts)
    else:
        i_dir = np.empty(0, dtype=np.int64)
        j_dir = np.empty(0, dtype=np.int64)
    deg = np.bincount(i_dir, minlength=n)
    indptr = np.concatenate(([0], np.cumsum(deg)))
    indices = j_dir[np.argsort(i_dir, kind="stable")]
    return indptr, indices
