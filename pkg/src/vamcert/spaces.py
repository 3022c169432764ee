"""Geodesic spaces with an explicit convex-combination map.

Two concrete instances are provided: Euclidean R^d and a tripod-style metric
tree (several half-lines glued at a common root).  Both are nonpositively
curved, so the convexity map satisfies the four standard hyperbolicity
axioms and the midpoint comparison inequality; ``check_axioms`` verifies all
of them, plus the derived combination identities, on seeded random samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Tuple, Union

import numpy as np

__all__ = [
    "EuclideanPoint",
    "TreePoint",
    "Point",
    "WholeSpace",
    "Ball",
    "Box",
    "EuclideanSpace",
    "TripodSpace",
    "Space",
    "AxiomReport",
    "check_axioms",
]

ROOT_TOL = 1e-12

EuclideanPoint = np.ndarray


@dataclass(frozen=True)
class TreePoint:
    """Point on a metric tree: a branch index and a distance t >= 0 from the root."""

    branch: int
    t: float

    def __post_init__(self):
        if self.t < 0:
            raise ValueError(f"tree coordinate must be >= 0, got {self.t}")


Point = Union[EuclideanPoint, TreePoint]


# --------------------------------------------------------------------------
# convex subsets


@dataclass(frozen=True)
class WholeSpace:
    def contains(self, space: "Space", p: Point, tol: float = 1e-9) -> bool:
        return True

    def project(self, space: "Space", p: Point) -> Point:
        return p


@dataclass(frozen=True)
class Ball:
    """Closed metric ball; convex in any of the supported spaces."""

    center: Point
    radius: float

    def contains(self, space: "Space", p: Point, tol: float = 1e-9) -> bool:
        return space.dist(self.center, p) <= self.radius + tol

    def project(self, space: "Space", p: Point) -> Point:
        d = space.dist(self.center, p)
        if d <= self.radius:
            return p
        return space.combine(self.center, p, self.radius / d)


@dataclass(frozen=True)
class Box:
    """Axis-aligned box; Euclidean spaces only."""

    lo: np.ndarray
    hi: np.ndarray

    def contains(self, space: "Space", p: Point, tol: float = 1e-9) -> bool:
        return bool(np.all(p >= self.lo - tol) and np.all(p <= self.hi + tol))

    def project(self, space: "Space", p: Point) -> Point:
        return np.clip(p, self.lo, self.hi)


Subset = Union[WholeSpace, Ball, Box]


# --------------------------------------------------------------------------
# spaces


@dataclass(frozen=True)
class EuclideanSpace:
    """R^d with the linear convex combination."""

    dim: int
    subset: Subset = field(default_factory=WholeSpace)

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"dimension must be >= 1, got {self.dim}")
        if isinstance(self.subset, Box) and (
            len(self.subset.lo) != self.dim or len(self.subset.hi) != self.dim
        ):
            raise ValueError("box bounds do not match the space dimension")

    def point(self, coords: Iterable[float]) -> EuclideanPoint:
        p = np.asarray(coords, dtype=float)
        if p.shape != (self.dim,):
            raise ValueError(f"expected {self.dim} coordinates, got shape {p.shape}")
        return p

    def dist(self, p: Point, q: Point) -> float:
        self._validate(p)
        self._validate(q)
        return float(np.linalg.norm(p - q))

    def combine(self, x: Point, y: Point, lam: float) -> Point:
        if not 0.0 <= lam <= 1.0:
            raise ValueError(f"combination parameter must lie in [0,1], got {lam}")
        self._validate(x)
        self._validate(y)
        return (1.0 - lam) * x + lam * y

    def equal(self, p: Point, q: Point, tol: float = ROOT_TOL) -> bool:
        return self.dist(p, q) <= tol

    def _validate(self, p: Point) -> None:
        if not isinstance(p, np.ndarray) or p.shape != (self.dim,):
            raise ValueError(f"point does not belong to R^{self.dim}: {p!r}")


@dataclass(frozen=True)
class TripodSpace:
    """Metric tree made of ``branches`` half-lines glued at a common root.

    The root is the point with t = 0 on any branch.  Geodesics within one
    branch are segments; between branches they pass through the root.
    """

    branches: int
    subset: Subset = field(default_factory=WholeSpace)

    def __post_init__(self):
        if self.branches < 2:
            raise ValueError(f"a tree needs >= 2 branches, got {self.branches}")

    def point(self, branch: int, t: float) -> TreePoint:
        if not 0 <= branch < self.branches:
            raise ValueError(f"branch index {branch} out of range [0,{self.branches})")
        return TreePoint(branch, float(t))

    def root(self) -> TreePoint:
        return TreePoint(0, 0.0)

    def dist(self, p: Point, q: Point) -> float:
        self._validate(p)
        self._validate(q)
        if p.branch == q.branch:
            return abs(p.t - q.t)
        return p.t + q.t

    def combine(self, x: Point, y: Point, lam: float) -> Point:
        if not 0.0 <= lam <= 1.0:
            raise ValueError(f"combination parameter must lie in [0,1], got {lam}")
        self._validate(x)
        self._validate(y)
        if x.branch == y.branch:
            return TreePoint(x.branch, (1.0 - lam) * x.t + lam * y.t)
        # distinct branches: walk lam * d(x,y) from x through the root
        walk = lam * (x.t + y.t)
        if walk <= x.t:
            return TreePoint(x.branch, x.t - walk)
        return TreePoint(y.branch, walk - x.t)

    def equal(self, p: Point, q: Point, tol: float = ROOT_TOL) -> bool:
        return self.dist(p, q) <= tol

    def _validate(self, p: Point) -> None:
        if not isinstance(p, TreePoint):
            raise ValueError(f"point does not belong to the tree: {p!r}")
        if not 0 <= p.branch < self.branches:
            raise ValueError(f"branch index {p.branch} out of range [0,{self.branches})")


Space = Union[EuclideanSpace, TripodSpace]


# --------------------------------------------------------------------------
# randomized axiom checking


@dataclass
class AxiomReport:
    """Outcome of a randomized axiom check; a failure is a report, not an error."""

    passed: bool
    samples: int
    seed: int
    tol: float
    worst_margin: float = 0.0
    first_violation: Optional[Tuple[str, int, float]] = None  # (axiom, sample, excess)

    def record(self, axiom: str, index: int, excess: float) -> None:
        if excess > self.worst_margin:
            self.worst_margin = excess
        if excess > self.tol and self.first_violation is None:
            self.passed = False
            self.first_violation = (axiom, index, excess)


def _sample_point(space: Space, rng: np.random.Generator, scale: float = 5.0) -> Point:
    if isinstance(space, EuclideanSpace):
        p = rng.uniform(-scale, scale, size=space.dim)
        return space.subset.project(space, p)
    branch = int(rng.integers(space.branches))
    p = TreePoint(branch, float(rng.uniform(0.0, scale)))
    return space.subset.project(space, p)


def check_axioms(space: Space, sample_count: int = 10_000, tol: float = 1e-9,
                 seed: int = 0) -> AxiomReport:
    """Verify the convexity-map axioms on random samples.

    Checks, for sampled points and parameters: the four hyperbolicity axioms,
    the midpoint comparison inequality for nonpositive curvature, the
    endpoint/parameter identities of the combination map, the two mixed
    four-point inequalities, and membership of combinations in the configured
    convex subset.
    """
    if sample_count < 1:
        raise ValueError("sample_count must be >= 1")
    rng = np.random.default_rng(seed)
    report = AxiomReport(passed=True, samples=sample_count, seed=seed, tol=tol)
    d, W = space.dist, space.combine

    for i in range(sample_count):
        x, y, z, w = (_sample_point(space, rng) for _ in range(4))
        lam = float(rng.uniform())
        mu = float(rng.uniform())

        dxy = d(x, y)
        p_lam = W(x, y, lam)
        p_mu = W(x, y, mu)

        # (W1) combination lies within the weighted distances to any point
        report.record("W1", i, d(z, p_lam) - ((1 - lam) * d(z, x) + lam * d(z, y)))
        # (W2) exact parameter-difference identity
        report.record("W2", i, abs(d(p_lam, p_mu) - abs(lam - mu) * dxy))
        # (W3) reflection symmetry
        report.record("W3", i, d(p_lam, W(y, x, 1 - lam)))
        # (W4) joint convexity of the metric
        report.record(
            "W4", i,
            d(W(x, z, lam), W(y, w, lam)) - ((1 - lam) * d(x, y) + lam * d(z, w)),
        )
        # midpoint comparison inequality (nonpositive curvature)
        mid = W(x, y, 0.5)
        report.record(
            "CAT0", i,
            d(z, mid) ** 2 - (0.5 * d(z, x) ** 2 + 0.5 * d(z, y) ** 2 - 0.25 * dxy**2),
        )
        # endpoint and degenerate-parameter identities
        report.record("endpoint0", i, d(W(x, y, 0.0), x))
        report.record("endpoint1", i, d(W(x, y, 1.0), y))
        report.record("self_combine", i, d(W(x, x, lam), x))
        # distances from the endpoints along the geodesic
        report.record("param_from_x", i, abs(d(x, p_lam) - lam * dxy))
        report.record("param_from_y", i, abs(d(y, p_lam) - (1 - lam) * dxy))
        # mixed four-point inequalities with distinct parameters
        report.record(
            "four_point_a", i,
            d(W(x, z, lam), W(y, w, mu))
            - ((1 - lam) * d(x, y) + lam * d(z, w) + abs(lam - mu) * d(y, w)),
        )
        report.record(
            "four_point_b", i,
            d(W(x, z, 1 - lam), W(y, w, 1 - mu))
            - (lam * d(x, y) + (1 - lam) * d(z, w) + abs(lam - mu) * d(y, w)),
        )
        # convexity of the configured subset
        if not space.subset.contains(space, p_lam, tol):
            report.record("subset_convexity", i, float("inf"))

    return report
