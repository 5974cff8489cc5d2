"""Domain types shared by every other module.

The model: TASEP on the integer lattice, particles labeled 1, 2, ... from
right to left (``x_1(t) > x_2(t) > ...``).  The first ``M`` particles jump
with rate ``alpha``, all later ones with rate 1.  Particle ``j`` starts at
``2*(M - j)``, so the last slow particle sits at the origin and consecutive
particles are separated by one empty site.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field


class Infinity:
    """Tagged value for an infinite block of slow particles."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INFINITE_M"

    def __reduce__(self):
        return (Infinity, ())


#: Singleton used as ``SystemSpec.M`` for the infinite-block (wall) setup.
INFINITE_M = Infinity()


class WallLabelError(ValueError):
    """Raised when a finite-M query is made against an infinite-M spec.

    Infinite specs have no absolute label 1, 2, ...; queries must be made
    relative to the wall (the last slow particle) instead.
    """


class NotSpaceLike(ValueError):
    """Raised when a set of space-time points is not mutually space-like."""

    def __init__(self, p1, p2):
        self.pair = (p1, p2)
        super().__init__(f"points {p1} and {p2} are not space-like comparable")


@dataclass(frozen=True)
class SystemSpec:
    """Jump rates and initial data: M slow particles of rate alpha.

    ``M`` may be :data:`INFINITE_M`, in which case only wall-relative
    labels are meaningful (see :class:`WallLabelError`).
    """

    M: int | Infinity
    alpha: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not isinstance(self.M, Infinity):
            if not (isinstance(self.M, int) and self.M >= 1):
                raise ValueError(f"M must be a positive integer or INFINITE_M, got {self.M!r}")

    @property
    def infinite(self) -> bool:
        return isinstance(self.M, Infinity)

    def require_finite(self) -> int:
        if self.infinite:
            raise WallLabelError(
                "spec has infinitely many slow particles; use wall-relative labels"
            )
        return self.M

    def jump_rate(self, j: int) -> float:
        """Rate of particle ``j`` (1-based, right to left)."""
        if j < 1:
            raise ValueError(f"particle labels start at 1, got {j}")
        if self.infinite:
            return self.alpha
        return self.alpha if j <= self.M else 1.0


def initial_position(j: int, spec: SystemSpec) -> int:
    """Starting site of particle ``j``: ``2*(M - j)``."""
    if j < 1:
        raise ValueError(f"particle labels start at 1, got {j}")
    m = spec.require_finite()
    return 2 * (m - j)


def wall_relative_initial_position(n: int) -> int:
    """Starting site ``-2n`` of the n-th normal particle behind the wall.

    For infinite-M specs the particles of rate 1 are relabeled 1, 2, ...
    starting from the one directly behind the last slow particle (which
    itself starts at the origin).
    """
    if n < 1:
        raise ValueError(f"wall-relative labels start at 1, got {n}")
    return -2 * n


@dataclass(frozen=True, order=False)
class SpaceTimePoint:
    """A (particle label, time) observation point."""

    n: int
    t: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"particle label must be >= 1, got {self.n}")
        if self.t < 0 or not math.isfinite(self.t):
            raise ValueError(f"time must be finite and nonnegative, got {self.t}")


def precedes(p1: SpaceTimePoint, p2: SpaceTimePoint) -> bool:
    """Strict space-like order: ``n1 <= n2``, ``t1 >= t2``, points distinct."""
    return p1.n <= p2.n and p1.t >= p2.t and (p1.n, p1.t) != (p2.n, p2.t)


def is_space_like(p1: SpaceTimePoint, p2: SpaceTimePoint) -> bool:
    """True iff the two points are comparable (in either direction)."""
    return precedes(p1, p2) or precedes(p2, p1)


@dataclass
class SpaceLikeSequence:
    """Points ordered so that consecutive ones satisfy :func:`precedes`.

    ``thresholds`` optionally attaches one integer site per point; joint
    probabilities are then of the form P(x_{n_k}(t_k) >= a_k for all k).
    """

    points: list[SpaceTimePoint]
    thresholds: list[int] | None = field(default=None)

    def __post_init__(self):
        for a, b in zip(self.points, self.points[1:]):
            if not precedes(a, b):
                raise NotSpaceLike(a, b)
        if self.thresholds is not None and len(self.thresholds) != len(self.points):
            raise ValueError("one threshold per point required")

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)


def sort_space_like(points: list[SpaceTimePoint]) -> SpaceLikeSequence:
    """Order mutually space-like points into their unique chain.

    Raises :class:`NotSpaceLike` naming an offending pair when no such
    ordering exists.
    """
    ordered = sorted(points, key=lambda p: (p.n, -p.t))
    for a, b in zip(ordered, ordered[1:]):
        if not precedes(a, b):
            raise NotSpaceLike(a, b)
    return SpaceLikeSequence(points=ordered)
