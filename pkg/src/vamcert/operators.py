"""Contractions, proximal/resolvent families, and the limit map.

The catalog covers the operator families used by the iteration engine: a
constant map and a geodesic pull as contractions; proximal mappings of a
small stock of convex objectives and resolvents of a nonexpansive map as the
varying family.  Each family member ``T_n`` uses the step size ``lambda_n``
attached through a schedule, and the whole family is expected to satisfy the
resolvent compatibility inequality

    d(T_n y, T_m y) <= |1 - lambda_m/lambda_n| * d(y, T_n y)

which ``check_res`` verifies numerically on sample points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .spaces import Ball, Box, EuclideanSpace, Point, Space, TreePoint, TripodSpace, WholeSpace

__all__ = [
    "ConstantMap",
    "GeodesicPull",
    "Contraction",
    "SquaredDistance",
    "ScaledL1",
    "Indicator",
    "ConvexObjective",
    "prox_eval",
    "prox_by_search",
    "ShrinkTowardRoot",
    "resolvent_nonexp_eval",
    "ProxFamily",
    "ResolventFamily",
    "Family",
    "ResReport",
    "check_res",
    "NonContractionError",
]

EPS_PROX = 1e-12


class NonContractionError(RuntimeError):
    """Signals that a supposed contraction expanded distances during iteration."""


# --------------------------------------------------------------------------
# contractions


@dataclass(frozen=True)
class ConstantMap:
    """f(x) = u; a 0-contraction."""

    u: Point
    alpha: float = 0.0

    def __call__(self, space: Space, x: Point) -> Point:
        return self.u


@dataclass(frozen=True)
class GeodesicPull:
    """f(x) = the point a fraction ``alpha`` of the way from ``u`` to ``x``.

    Joint convexity of the metric makes this an alpha-contraction.
    """

    u: Point
    alpha: float

    def __post_init__(self):
        if not 0.0 <= self.alpha < 1.0:
            raise ValueError(f"contraction factor must lie in [0,1), got {self.alpha}")

    def __call__(self, space: Space, x: Point) -> Point:
        return space.combine(self.u, x, self.alpha)


Contraction = Union[ConstantMap, GeodesicPull]


# --------------------------------------------------------------------------
# convex objectives and their proximal mappings


@dataclass(frozen=True)
class SquaredDistance:
    """F(x) = 1/2 d(x, b)^2.

    Its proximal map slides toward ``b`` along the geodesic, which covers both
    the linear and the tree instance with one formula.
    """

    b: Point

    def value(self, space: Space, x: Point) -> float:
        return 0.5 * space.dist(x, self.b) ** 2

    def prox(self, space: Space, lam: float, x: Point) -> Point:
        return space.combine(x, self.b, lam / (1.0 + lam))

    def minimizer(self, space: Space) -> Point:
        return self.b


@dataclass(frozen=True)
class ScaledL1:
    """F(x) = c * ||x||_1 on a Euclidean space; prox is soft thresholding."""

    c: float = 1.0

    def __post_init__(self):
        if self.c <= 0:
            raise ValueError(f"scale must be positive, got {self.c}")

    def value(self, space: Space, x: Point) -> float:
        return self.c * float(np.sum(np.abs(x)))

    def prox(self, space: Space, lam: float, x: Point) -> Point:
        if not isinstance(space, EuclideanSpace):
            raise ValueError("the l1 objective requires a Euclidean space")
        th = self.c * lam
        return np.sign(x) * np.maximum(np.abs(x) - th, 0.0)

    def minimizer(self, space: Space) -> Point:
        return np.zeros(space.dim)


@dataclass(frozen=True)
class Indicator:
    """F = 0 on a closed convex set, +inf outside; prox is the projection."""

    region: Union[Ball, Box]

    def value(self, space: Space, x: Point) -> float:
        return 0.0 if self.region.contains(space, x) else math.inf

    def prox(self, space: Space, lam: float, x: Point) -> Point:
        return self.region.project(space, x)

    def minimizer(self, space: Space) -> Point:
        if isinstance(self.region, Ball):
            return self.region.center
        return self.region.lo.copy()


ConvexObjective = Union[SquaredDistance, ScaledL1, Indicator]


def prox_eval(objective: ConvexObjective, space: Space, lam: float, x: Point) -> Point:
    """argmin_y { F(y) + 1/(2 lam) d(x,y)^2 }, by closed form where available."""
    if lam <= 0:
        raise ValueError(f"prox parameter must be positive, got {lam}")
    if hasattr(objective, "prox"):
        return objective.prox(space, lam, x)
    return prox_by_search(objective, space, lam, x)


def prox_by_search(objective, space: Space, lam: float, x: Point,
                   eps: float = EPS_PROX, max_iter: int = 400) -> Point:
    """Iterative fallback for objectives exposing only ``value``.

    Euclidean spaces: coordinate-wise golden-section refinement around x.
    Trees: golden-section along each branch.  Intended for catalog-scale
    well-conditioned objectives and as an independent cross-check of the
    closed forms.
    """
    if lam <= 0:
        raise ValueError(f"prox parameter must be positive, got {lam}")

    def moreau(y: Point) -> float:
        return objective.value(space, y) + space.dist(x, y) ** 2 / (2.0 * lam)

    if isinstance(space, TripodSpace):
        best = None
        for branch in range(space.branches):
            t = _golden(lambda s: moreau(TreePoint(branch, s)), 0.0, x.t + 10.0 * lam + 10.0, eps)
            cand = TreePoint(branch, t)
            if best is None or moreau(cand) < moreau(best):
                best = cand
        return best

    y = np.array(x, dtype=float)
    span = 10.0 * lam + 10.0
    for _ in range(max_iter):
        moved = 0.0
        for j in range(space.dim):
            def slice_obj(s: float, j=j) -> float:
                z = y.copy()
                z[j] = s
                return moreau(z)

            new = _golden(slice_obj, y[j] - span, y[j] + span, eps)
            moved = max(moved, abs(new - y[j]))
            y[j] = new
        span = max(10.0 * moved, 1e-6)
        if moved <= eps:
            break
    return y


_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def _golden(f: Callable[[float], float], lo: float, hi: float, eps: float) -> float:
    """Golden-section minimizer for a unimodal slice."""
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > eps:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


# --------------------------------------------------------------------------
# nonexpansive maps and their resolvents


@dataclass(frozen=True)
class ShrinkTowardRoot:
    """Tree map (branch, t) |-> (branch, max(t - c, 0)); nonexpansive."""

    c: float = 1.0

    def __call__(self, space: Space, x: Point) -> Point:
        return TreePoint(x.branch, max(x.t - self.c, 0.0))


def resolvent_nonexp_eval(T, space: Space, lam: float, x: Point,
                          eps_fp: float = 1e-12) -> Point:
    """Unique fixed point of z |-> combine(x, Tz, lam/(1+lam)) to accuracy eps_fp.

    The map is a lam/(1+lam)-contraction, so plain successive substitution
    converges; the iteration count is capped by the a-priori estimate from
    the first displacement, and an expanding step aborts loudly.
    """
    if lam <= 0:
        raise ValueError(f"resolvent parameter must be positive, got {lam}")
    c = lam / (1.0 + lam)
    z = x
    z_next = space.combine(x, T(space, z), c)
    d0 = space.dist(z, z_next)
    if d0 == 0.0:
        return z
    # d(z_n, z*) <= c^n/(1-c) * d0  =>  stop after at most this many steps
    cap = max(1, int(math.ceil(math.log(eps_fp * (1.0 - c) / d0) / math.log(c))) + 2)
    prev_step = d0
    for _ in range(cap):
        z, z_next = z_next, space.combine(x, T(space, z_next), c)
        step = space.dist(z, z_next)
        if step > prev_step * (1.0 + 1e-9) + 1e-15:
            raise NonContractionError(
                f"resolvent iteration expanded: {prev_step} -> {step}")
        prev_step = step
        # a posteriori: d(z_next, z*) <= c/(1-c) * step
        if step * c / (1.0 - c) <= eps_fp:
            break
    return z_next


# --------------------------------------------------------------------------
# families


@dataclass(frozen=True)
class ProxFamily:
    """T_n = proximal map of ``objective`` at step size lambda_n."""

    objective: ConvexObjective
    lambdas: Callable[[int], Fraction]
    z: Point  # common fixed point witness; validated, never searched for

    def eval(self, space: Space, n: int, x: Point) -> Point:
        return prox_eval(self.objective, space, float(self.lambdas(n)), x)

    def eval_at(self, space: Space, lam: float, x: Point) -> Point:
        return prox_eval(self.objective, space, lam, x)


@dataclass(frozen=True)
class ResolventFamily:
    """T_n = resolvent of a nonexpansive map at step size lambda_n."""

    T: Callable[[Space, Point], Point]
    lambdas: Callable[[int], Fraction]
    z: Point
    eps_fp: float = 1e-12

    def eval(self, space: Space, n: int, x: Point) -> Point:
        return resolvent_nonexp_eval(self.T, space, float(self.lambdas(n)), x, self.eps_fp)

    def eval_at(self, space: Space, lam: float, x: Point) -> Point:
        return resolvent_nonexp_eval(self.T, space, lam, x, self.eps_fp)


Family = Union[ProxFamily, ResolventFamily]


def family_eval(family: Family, space: Space, n: int, x: Point) -> Point:
    """T_n x for the family member at index n."""
    if n < 0:
        raise ValueError(f"family index must be a natural, got {n}")
    return family.eval(space, n, x)


def tilde_T_eval(family: Family, space: Space, lam_limit: float, x: Point) -> Point:
    """The pointwise limit of the family, evaluated directly at the limit
    step size.

    For resolvent-type families the map is continuous in the step size, so
    the limit member is the member at the limit parameter.
    """
    if lam_limit <= 0:
        raise ValueError(f"limit parameter must be positive, got {lam_limit}")
    return family.eval_at(space, lam_limit, x)


# --------------------------------------------------------------------------
# resolvent-condition checking


@dataclass
class ResReport:
    """Numerical verdict for the family compatibility inequality."""

    passed: bool
    pairs_checked: int
    points_checked: int
    tol: float
    worst_margin: float = -math.inf
    first_violation: Optional[Tuple[int, int, int, float]] = None  # (n, m, point, excess)


def check_res(family: Family, space: Space, pairs: Iterable[Tuple[int, int]],
              points: Sequence[Point], tol: float = 1e-9) -> ResReport:
    """Assert d(T_n y, T_m y) <= |1 - lambda_m/lambda_n| d(y, T_n y) + tol
    at every sample point and index pair."""
    points = list(points)
    if not points:
        raise ValueError("need at least one sample point")
    pairs = list(pairs)
    report = ResReport(passed=True, pairs_checked=len(pairs),
                       points_checked=len(points), tol=tol)
    cache: dict[int, List[Point]] = {}

    def images(n: int) -> List[Point]:
        if n not in cache:
            cache[n] = [family.eval(space, n, y) for y in points]
        return cache[n]

    for n, m in pairs:
        lam_n = Fraction(family.lambdas(n))
        lam_m = Fraction(family.lambdas(m))
        factor = abs(1 - lam_m / lam_n)
        tn_pts = images(n)
        tm_pts = images(m)
        for j, y in enumerate(points):
            lhs = space.dist(tn_pts[j], tm_pts[j])
            rhs = float(factor) * space.dist(y, tn_pts[j])
            excess = lhs - rhs
            if excess > report.worst_margin:
                report.worst_margin = excess
            if excess > tol and report.first_violation is None:
                report.passed = False
                report.first_violation = (n, m, j, excess)
    return report
