"""Single-slot mobility laws on the unit square.

Five models, all started from their stationary (uniform) position law:

* fully random -- every node resamples uniformly each slot;
* velocity constrained -- uniform step within a disk of radius ``v_max``,
  clipped to the square (or reflected, as a sensitivity alternative);
* partially random -- a frozen random subset of ``k`` nodes does fully
  random steps, the rest never move;
* one dimensional -- a frozen random split into vertical and horizontal
  movers, each resampling its free coordinate uniformly;
* static -- nobody moves.

``move`` is a pure function of (states, spec, rng): trials with independent
generators can run in parallel with no shared mutable state.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .geometry import sample_uniform_positions

__all__ = [
    "Mobility",
    "MobilitySpec",
    "NodeStates",
    "init_states",
    "move",
    "mobility_intensity",
]

# Motion tags carried per node.
FREE = 0
STATIC = 1
VERTICAL = 2    # moves along a vertical line: x frozen
HORIZONTAL = 3  # moves along a horizontal line: y frozen


class Mobility(str, Enum):
    FULLY_RANDOM = "fr"
    VELOCITY_CONSTRAINED = "vc"
    PARTIALLY_RANDOM = "pr"
    ONE_DIMENSIONAL = "1d"
    STATIC = "static"


@dataclass(frozen=True)
class MobilitySpec:
    """Which mobility law drives each slot, with the law's parameters.

    Exactly the parameters of the declared kind may be present:
    ``v_max`` for velocity-constrained motion, ``k`` (number of mobile
    nodes) for partially random, ``n_v``/``n_h`` (vertical/horizontal
    mover counts) for one-dimensional.  ``boundary`` selects the
    velocity-constrained wall rule: ``"clip"`` resamples uniformly on
    disk-intersect-square, ``"reflect"`` mirrors overshoot back inside.
    """

    kind: Mobility
    v_max: float | None = None
    k: int | None = None
    n_v: int | None = None
    n_h: int | None = None
    boundary: str = "clip"

    def __post_init__(self):
        object.__setattr__(self, "kind", Mobility(self.kind))
        need = {
            Mobility.VELOCITY_CONSTRAINED: ("v_max",),
            Mobility.PARTIALLY_RANDOM: ("k",),
            Mobility.ONE_DIMENSIONAL: ("n_v", "n_h"),
        }.get(self.kind, ())
        for name in ("v_max", "k", "n_v", "n_h"):
            val = getattr(self, name)
            if name in need and val is None:
                raise ValueError(f"{self.kind.value} mobility requires {name}")
            if name not in need and val is not None:
                raise ValueError(f"{name} is not a parameter of {self.kind.value} mobility")
        if self.v_max is not None and not 0.0 < self.v_max <= 1.0:
            raise ValueError(f"v_max must lie in (0, 1], got {self.v_max}")
        if self.k is not None and self.k < 0:
            raise ValueError(f"k must be >= 0, got {self.k}")
        if self.kind is Mobility.ONE_DIMENSIONAL:
            if self.n_v < 0 or self.n_h < 0:
                raise ValueError("n_v and n_h must be >= 0")
        if self.boundary not in ("clip", "reflect"):
            raise ValueError(f"unknown boundary rule {self.boundary!r}")

    def validate_for(self, n: int) -> None:
        """Check population-dependent constraints for an n-node network."""
        if self.kind is Mobility.PARTIALLY_RANDOM and self.k > n:
            raise ValueError(f"k={self.k} exceeds network size n={n}")
        if self.kind is Mobility.ONE_DIMENSIONAL and self.n_v + self.n_h != n:
            raise ValueError(f"n_v + n_h = {self.n_v + self.n_h} must equal n={n}")

    @classmethod
    def fully_random(cls) -> "MobilitySpec":
        return cls(Mobility.FULLY_RANDOM)

    @classmethod
    def velocity_constrained(cls, v_max: float, boundary: str = "clip") -> "MobilitySpec":
        return cls(Mobility.VELOCITY_CONSTRAINED, v_max=v_max, boundary=boundary)

    @classmethod
    def partially_random(cls, k: int) -> "MobilitySpec":
        return cls(Mobility.PARTIALLY_RANDOM, k=k)

    @classmethod
    def one_dimensional(cls, n_v: int, n_h: int) -> "MobilitySpec":
        return cls(Mobility.ONE_DIMENSIONAL, n_v=n_v, n_h=n_h)

    @classmethod
    def static(cls) -> "MobilitySpec":
        return cls(Mobility.STATIC)


@dataclass(frozen=True)
class NodeStates:
    """Positions and per-node motion tags for one instant.

    ``positions`` is an ``(n, 2)`` array on the unit square; ``motion``
    holds one of FREE/STATIC/VERTICAL/HORIZONTAL per node.  Line-constrained
    nodes keep their frozen coordinate forever; static nodes never move.
    Arrays are read-only: transitions return fresh instances.
    """

    positions: np.ndarray
    motion: np.ndarray

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=np.float64)
        mot = np.asarray(self.motion, dtype=np.int8)
        if pos.ndim != 2 or pos.shape[1] != 2 or pos.shape[0] != mot.shape[0]:
            raise ValueError("positions must be (n, 2) with one motion tag per node")
        pos.setflags(write=False)
        mot.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "motion", mot)

    @property
    def n(self) -> int:
        return self.positions.shape[0]


def init_states(n: int, spec: MobilitySpec, rng) -> NodeStates:
    """Draw n nodes from the stationary law of ``spec``.

    Positions are uniform on the square.  For partially random mobility a
    uniformly random k-subset is tagged free and frozen for the run; for
    one-dimensional mobility a uniformly random n_v-subset moves vertically
    and the rest horizontally (line offsets are the uniform coordinates).
    """
    spec.validate_for(n)
    rng = np.random.default_rng(rng)
    positions = sample_uniform_positions(n, rng)
    motion = np.full(n, FREE, dtype=np.int8)
    if spec.kind is Mobility.STATIC:
        motion[:] = STATIC
    elif spec.kind is Mobility.PARTIALLY_RANDOM:
        motion[:] = STATIC
        mobile = rng.choice(n, size=spec.k, replace=False)
        motion[mobile] = FREE
    elif spec.kind is Mobility.ONE_DIMENSIONAL:
        motion[:] = HORIZONTAL
        vertical = rng.choice(n, size=spec.n_v, replace=False)
        motion[vertical] = VERTICAL
    return NodeStates(positions, motion)


def move(states: NodeStates, spec: MobilitySpec, rng) -> NodeStates:
    """Advance every node one slot under ``spec``; returns new states."""
    spec.validate_for(states.n)
    _check_tags(states, spec)
    rng = np.random.default_rng(rng)
    kind = spec.kind
    pos = states.positions

    if kind is Mobility.STATIC:
        new = pos.copy()
    elif kind is Mobility.FULLY_RANDOM:
        new = rng.random((states.n, 2))
    elif kind is Mobility.PARTIALLY_RANDOM:
        new = pos.copy()
        free = states.motion == FREE
        new[free] = rng.random((int(free.sum()), 2))
    elif kind is Mobility.ONE_DIMENSIONAL:
        new = pos.copy()
        vert = states.motion == VERTICAL
        horiz = states.motion == HORIZONTAL
        new[vert, 1] = rng.random(int(vert.sum()))
        new[horiz, 0] = rng.random(int(horiz.sum()))
    elif kind is Mobility.VELOCITY_CONSTRAINED:
        if spec.boundary == "clip":
            new = _disk_step_clipped(pos, spec.v_max, rng)
        else:
            new = _disk_step_reflected(pos, spec.v_max, rng)
    else:  # pragma: no cover - enum is exhaustive
        raise AssertionError(kind)
    return NodeStates(new, states.motion)


def mobility_intensity(spec: MobilitySpec, n: int | None = None) -> float:
    """Scalar mobility knob in [0, 1] for comparing models.

    Fully random counts as 1 (the reference), static as 0.  Velocity
    constrained reports ``v_max``, partially random the mobility ratio
    ``k/n`` (``n`` required), one-dimensional the mobility balance
    ``n_v * n_h / n**2``.
    """
    kind = spec.kind
    if kind is Mobility.FULLY_RANDOM:
        return 1.0
    if kind is Mobility.STATIC:
        return 0.0
    if kind is Mobility.VELOCITY_CONSTRAINED:
        return float(spec.v_max)
    if kind is Mobility.PARTIALLY_RANDOM:
        if n is None:
            raise ValueError("mobility ratio k/n needs the network size n")
        spec.validate_for(n)
        return spec.k / n
    total = spec.n_v + spec.n_h
    if total == 0:
        raise ValueError("one-dimensional spec with zero nodes")
    return spec.n_v * spec.n_h / total**2


def _check_tags(states: NodeStates, spec: MobilitySpec) -> None:
    tags = set(np.unique(states.motion).tolist())
    allowed = {
        Mobility.FULLY_RANDOM: {FREE},
        Mobility.VELOCITY_CONSTRAINED: {FREE},
        Mobility.STATIC: {STATIC},
        Mobility.PARTIALLY_RANDOM: {FREE, STATIC},
        Mobility.ONE_DIMENSIONAL: {VERTICAL, HORIZONTAL},
    }[spec.kind]
    if not tags <= allowed:
        raise ValueError(
            f"states carry motion tags {sorted(tags)} incompatible with "
            f"{spec.kind.value} mobility"
        )


def _disk_offsets(count: int, v_max: float, rng) -> np.ndarray:
    rad = v_max * np.sqrt(rng.random(count))
    ang = 2.0 * np.pi * rng.random(count)
    return np.stack([rad * np.cos(ang), rad * np.sin(ang)], axis=1)


def _disk_step_clipped(pos: np.ndarray, v_max: float, rng) -> np.ndarray:
    """Uniform draw from disk(pos, v_max) intersected with the square.

    Rejection sampling; acceptance is at least ~1/4 (worst case a corner
    node), so the loop terminates quickly.
    """
    new = np.empty_like(pos)
    todo = np.arange(pos.shape[0])
    while todo.size:
        prop = pos[todo] + _disk_offsets(todo.size, v_max, rng)
        ok = (
            (prop[:, 0] >= 0.0) & (prop[:, 0] <= 1.0)
            & (prop[:, 1] >= 0.0) & (prop[:, 1] <= 1.0)
        )
        new[todo[ok]] = prop[ok]
        todo = todo[~ok]
    return new


def _disk_step_reflected(pos: np.ndarray, v_max: float, rng) -> np.ndarray:
    """Disk step with overshoot mirrored at the walls.

    One reflection suffices since v_max <= 1.  Reflection never increases
    the per-axis displacement, so the speed bound still holds.
    """
    prop = pos + _disk_offsets(pos.shape[0], v_max, rng)
    prop = np.abs(prop)
    return np.where(prop > 1.0, 2.0 - prop, prop)
