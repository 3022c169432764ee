"""Iteration engine: the damped fixed-point schemes and their residual traces.

The explicit scheme iterates

    x_{n+1} = combine(f(x_n), T_n x_n, 1 - alpha_n)

for a contraction f and a family (T_n); with a constant f this is the
anchored (Halpern-type) proximal scheme, and with a proximal family it is
the viscosity proximal scheme.  The implicit companion points y_n solve
y = combine(f(y), T_limit y, 1 - alpha_n) by successive substitution.

Traces record the residual columns the rate certificates speak about:
consecutive-step distances, distances to the moving and the frozen family
members, and distances to the implicit companion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .moduli import ceil_frac
from .operators import Contraction, Family, family_eval, tilde_T_eval
from .schedules import Schedule
from .spaces import Point, Space

__all__ = [
    "IterationConfig",
    "BoundConstant",
    "Trace",
    "compute_bound_constant",
    "run_iteration",
    "halpern_trace",
    "browder_point",
    "w_sequence",
    "trace_invariant_report",
]

DEFAULT_POINT_CAP = 10**6


@dataclass(frozen=True)
class IterationConfig:
    space: Space
    family: Family
    contraction: Contraction
    schedule: Schedule
    x0: Point
    z: Point  # common fixed point witness, validated not searched for
    budget: int = 10**6
    metric_tol: float = 1e-9
    eps_fp: float = 1e-10
    point_cap: int = DEFAULT_POINT_CAP

    def contraction_factor(self) -> float:
        return float(getattr(self.contraction, "alpha", 0.0))


@dataclass(frozen=True)
class BoundConstant:
    """Integer envelope for all iterate distances, with its provenance."""

    value: int
    d_x0_z: float
    d_fz_z: float
    alpha: float

    def __int__(self) -> int:
        return self.value


def compute_bound_constant(config: IterationConfig, override: Optional[int] = None,
                           validate_fixed_point: bool = True) -> BoundConstant:
    """K >= max{d(x0,z), d(f(z),z)/(1-alpha)}, clamped to an integer >= 1.

    With a constant contraction this reduces to max{d(x0,z), d(u,z)}.  An
    explicit override is accepted if it still dominates the formula.
    """
    space = config.space
    alpha = config.contraction_factor()
    if alpha >= 1.0:
        raise ValueError("contraction factor must be < 1")
    d_x0_z = space.dist(config.x0, config.z)
    fz = config.contraction(space, config.z)
    d_fz_z = space.dist(fz, config.z)
    raw = max(d_x0_z, d_fz_z / (1.0 - alpha))
    needed = max(1, int(math.ceil(raw - 1e-12)))
    if override is not None:
        if override < needed:
            raise ValueError(f"override {override} is below the required bound {needed}")
        needed = override
    if validate_fixed_point:
        for n in range(21):
            gap = space.dist(family_eval(config.family, space, n, config.z), config.z)
            if gap > config.metric_tol:
                raise ValueError(
                    f"z is not a common fixed point: d(T_{n} z, z) = {gap}")
    return BoundConstant(needed, d_x0_z, d_fz_z, alpha)


@dataclass
class Trace:
    """Recorded iterate sequence with residual columns.

    ``columns[name][n]`` is the residual at iterate n; points are stored up
    to the configured cap so window searches can recompute distances.
    """

    columns: Dict[str, np.ndarray]
    points: List[Point]
    n_recorded: int
    meta: Dict[str, object] = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        if name not in self.columns:
            raise KeyError(f"trace has no column '{name}'; present: {sorted(self.columns)}")
        return self.columns[name]

    def column_names(self) -> List[str]:
        return list(self.columns)


def run_iteration(config: IterationConfig, n_max: int,
                  tm_indices: Sequence[int] = (),
                  with_tilde: bool = False,
                  with_browder: bool = False,
                  start: Optional[Point] = None,
                  anchor: Optional[Contraction] = None) -> Trace:
    """Run the explicit scheme for n in [0; n_max] and fill residual columns.

    Columns: ``step`` d(x_n, x_{n+1}); ``tn`` d(x_n, T_n x_n); ``tm_<m>``
    d(x_n, T_m x_n) for each requested frozen index; ``tildeT`` distance to
    the limit-member image; ``browder_gap`` distance to the implicit
    companion point (one inner solve per n).
    """
    if n_max > config.budget:
        raise ValueError(f"n_max {n_max} exceeds the iteration budget {config.budget}")
    space = config.space
    family = config.family
    f = anchor if anchor is not None else config.contraction
    schedule = config.schedule
    lam_limit = schedule.witnesses.lambda_limit

    if with_tilde and lam_limit is None:
        raise ValueError("tildeT column requires a schedule with a step-size limit")

    size = n_max + 1
    step = np.empty(size)
    tn = np.empty(size)
    tm = {m: np.empty(size) for m in tm_indices}
    tilde = np.empty(size) if with_tilde else None
    browder = np.empty(size) if with_browder else None

    x = start if start is not None else config.x0
    points: List[Point] = []
    lam_limit_f = float(lam_limit) if lam_limit is not None else None

    for n in range(size):
        if len(points) < config.point_cap:
            points.append(x)
        tnx = family_eval(family, space, n, x)
        fx = f(space, x)
        x_next = space.combine(fx, tnx, 1.0 - schedule.alpha_float(n))
        step[n] = space.dist(x, x_next)
        tn[n] = space.dist(x, tnx)
        for m in tm_indices:
            tm[m][n] = space.dist(x, family_eval(family, space, m, x))
        if tilde is not None:
            tilde[n] = space.dist(x, tilde_T_eval(family, space, lam_limit_f, x))
        if browder is not None:
            browder[n] = space.dist(x, browder_point(config, n, anchor=f))
        x = x_next

    columns: Dict[str, np.ndarray] = {"step": step, "tn": tn}
    for m in tm_indices:
        columns[f"tm_{m}"] = tm[m]
    if tilde is not None:
        columns["tildeT"] = tilde
    if browder is not None:
        columns["browder_gap"] = browder
    return Trace(columns=columns, points=points, n_recorded=size,
                 meta={"n_max": n_max, "schedule": schedule.name})


def halpern_trace(config: IterationConfig, n_max: int, **kwargs) -> Trace:
    """The anchored scheme: requires a constant contraction in the config."""
    if config.contraction_factor() != 0.0:
        raise ValueError("the anchored scheme takes a constant contraction")
    return run_iteration(config, n_max, **kwargs)


def browder_point(config: IterationConfig, n: int, eps_fp: Optional[float] = None,
                  anchor: Optional[Contraction] = None) -> Point:
    """Fixed point of x |-> combine(f(x), T_limit x, 1 - alpha_n) to eps_fp.

    The map contracts with factor alpha_n*alpha + 1 - alpha_n < 1, so plain
    successive substitution converges; iterations stop on the a-posteriori
    bound and are capped by the a-priori count from the first displacement.
    """
    eps = config.eps_fp if eps_fp is None else eps_fp
    space = config.space
    f = anchor if anchor is not None else config.contraction
    alpha = float(getattr(f, "alpha", 0.0))
    a_n = config.schedule.alpha_float(n)
    if a_n <= 0.0:
        raise ValueError("the implicit companion needs alpha_n > 0")
    delta = a_n * alpha + 1.0 - a_n
    if delta >= 1.0:
        raise ValueError(f"non-contractive companion map at n={n} (factor {delta})")
    lam_limit = config.schedule.witnesses.lambda_limit
    if lam_limit is None:
        raise ValueError("the implicit companion requires a step-size limit witness")
    lam = float(lam_limit)

    def s_map(y: Point) -> Point:
        return space.combine(f(space, y), tilde_T_eval(config.family, space, lam, y),
                             1.0 - a_n)

    y = config.z
    y_next = s_map(y)
    d0 = space.dist(y, y_next)
    if d0 == 0.0:
        return y
    if delta == 0.0:
        # the map is constant, one application is exact
        return y_next
    ratio = eps * (1.0 - delta) / d0
    cap = 1 if ratio >= 1.0 else max(
        1, int(math.ceil(math.log(ratio) / math.log(delta))) + 2)
    for _ in range(cap):
        y, y_next = y_next, s_map(y_next)
        gap = space.dist(y, y_next)
        if gap * delta / (1.0 - delta) <= eps:
            break
    return y_next


def w_sequence(config: IterationConfig, x: Point, n_max: int, **kwargs) -> Trace:
    """The anchored scheme started at x with anchor x itself."""
    from .operators import ConstantMap

    return run_iteration(config, n_max, start=x, anchor=ConstantMap(x), **kwargs)


# --------------------------------------------------------------------------
# trace-level inequality checks


@dataclass
class InvariantReport:
    passed: bool
    tol: float
    worst: Dict[str, float]
    first_violation: Optional[Tuple[str, int, float]] = None

    def record(self, name: str, n: int, excess: float) -> None:
        if excess > self.worst.get(name, -math.inf):
            self.worst[name] = excess
        if excess > self.tol and self.first_violation is None:
            self.passed = False
            self.first_violation = (name, n, excess)


def trace_invariant_report(config: IterationConfig, trace: Trace, K: BoundConstant,
                           tm_indices: Sequence[int] = (), tol: float = 1e-9,
                           browder_slack: float = 0.0) -> InvariantReport:
    """Check the distance envelopes and recurrence inequalities on a trace.

    Covers: iterate/image distances bounded by K and 2K; the damping
    inequality d(x_n, T_n x_n) <= d(x_n, x_{n+1}) + 2K alpha_n; the frozen
    index comparisons with ratio factors; and, when the companion column is
    present, its 2K envelope and one-step recurrence with the drift term.
    """
    space = config.space
    family = config.family
    f = config.contraction
    schedule = config.schedule
    alpha = config.contraction_factor()
    Kv = float(K.value)
    report = InvariantReport(passed=True, tol=tol, worst={})
    n_pts = len(trace.points)
    step = trace.column("step")
    tn = trace.column("tn")

    for n in range(n_pts):
        x = trace.points[n]
        dxz = space.dist(x, config.z)
        report.record("iterate_envelope", n, dxz - Kv)
        fx = f(space, x)
        report.record("contraction_image_envelope", n, space.dist(fx, config.z) - Kv)
        report.record("damping_residual", n, tn[n] - (step[n] + 2 * Kv * schedule.alpha_float(n)))
        if n + 1 < n_pts:
            report.record("step_envelope", n, step[n] - 2 * Kv)
        tnx = family_eval(family, space, n, x)
        for m in tm_indices:
            tmx = family_eval(family, space, m, x)
            report.record("frozen_image_envelope", n, space.dist(tmx, config.z) - Kv)
            report.record("frozen_step_envelope", n, space.dist(tmx, x) - 2 * Kv)
            report.record("frozen_vs_contraction", n, space.dist(tmx, fx) - 2 * Kv)
            lam_n = Fraction(schedule.lambdas(n))
            lam_m = Fraction(schedule.lambdas(m))
            ratio = lam_m / lam_n
            d_tn = space.dist(tnx, x)
            d_tm = space.dist(tmx, x)
            report.record("frozen_comparison", n,
                          d_tm - (float(abs(1 - ratio)) + 1.0) * d_tn)
            if lam_m >= lam_n:
                report.record("frozen_comparison_up", n, d_tm - float(ratio) * d_tn)
            else:
                report.record("frozen_comparison_down", n, d_tm - (2.0 - float(ratio)) * d_tn)

    if "browder_gap" in trace.columns:
        gap = trace.column("browder_gap")
        lam = float(schedule.witnesses.lambda_limit)
        for n in range(len(gap)):
            report.record("companion_envelope", n,
                          gap[n] - (2 * Kv + config.eps_fp + browder_slack))
            if n + 1 < len(gap):
                a_n = schedule.alpha_float(n)
                drift = (2 * Kv / (lam * (1 - alpha))) * abs(schedule.lambda_float(n) - lam) \
                    + (2 * Kv / (1 - alpha) ** 2) \
                    * abs(schedule.alpha_float(n) - schedule.alpha_float(n + 1)) / a_n**2
                bound = (1 - (1 - alpha) * a_n) * gap[n] + (1 - alpha) * a_n * drift
                report.record("companion_recurrence", n,
                              gap[n + 1] - (bound + 2 * config.eps_fp + browder_slack))
    return report
