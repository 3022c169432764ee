"""Constructors for every named rate certificate.

Each constructor takes schedule witnesses plus the captured constants (the
iterate envelope K, the contraction factor, step-size limit data) and
returns a first-class modulus or metastability witness.  Construction fails
loudly when a required witness is absent; evaluation of the recursive
metastability towers respects the active budget and records the recursion
depth reached.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, Optional, Union

from .moduli import (
    Budget,
    MetaRate,
    Modulus,
    Role,
    _ACTIVE_BUDGET,
    ceil_frac,
    ceil_ln,
    ceil_log_base,
    g_plus,
    g_shift,
    g_tilde,
    iterate,
    meta_transfer,
    monus,
)
from .schedules import MissingWitnessError, Schedule, derive_lambda_witnesses

__all__ = [
    "step_asreg_rate",
    "moving_asreg_rate",
    "frozen_asreg_rate",
    "companion_gap_rate",
    "limit_map_suite",
    "linear_rate_suite",
    "shifted_linear_asreg_rate",
    "family_cauchy_rate",
    "companion_meta_rate",
    "anchored_meta_rate",
    "viscosity_meta_rate",
]

Rational = Union[int, Fraction]


def _one_minus(alpha: Rational) -> Fraction:
    a = Fraction(alpha)
    if not 0 <= a < 1:
        raise ValueError(f"contraction factor must lie in [0,1), got {a}")
    return 1 - a


def _check_K(K: int) -> int:
    if K < 1:
        raise ValueError(f"iterate envelope must be a positive integer, got {K}")
    return K


# --------------------------------------------------------------------------
# asymptotic regularity


def step_asreg_rate(schedule: Schedule, alpha: Rational, K: int,
                    variant: str = "auto") -> Modulus:
    """Rate of convergence to 0 of the consecutive-step distances.

    ``variant`` picks the step-size witness route: ``ratio`` / ``ratio_rev``
    use the summable forward / backward ratio series, ``floor_diff`` combines
    the step-size floor with the summable difference series.  ``auto``
    prefers ``floor_diff`` when available.
    """
    one_minus = _one_minus(alpha)
    K = _check_K(K)
    w = schedule.witnesses
    sigma2 = w.require("alpha_diff_cauchy")
    sigma1_plus = g_plus(w.require("alpha_divergence"))

    if variant == "auto":
        variant = "floor_diff" if (w.lambda_diff_cauchy is not None
                                   and w.lambda_floor_inv is not None) else "ratio"

    if variant == "floor_diff":
        theta2 = w.require("lambda_diff_cauchy")
        cap = w.require("lambda_floor_inv")
        n_floor = w.require("lambda_floor_from")

        def chi(k: int) -> int:
            return max(sigma2(4 * K * (k + 1) - 1), n_floor,
                       theta2(4 * K * cap * (k + 1) - 1))
    elif variant in ("ratio", "ratio_rev"):
        name = "ratio_fwd_cauchy" if variant == "ratio" else "ratio_bwd_cauchy"
        theta1 = getattr(w, name)
        if theta1 is None:
            if w.lambda_diff_cauchy is not None and w.lambda_floor_inv is not None:
                fwd, bwd, _ = derive_lambda_witnesses(schedule)
                theta1 = fwd if variant == "ratio" else bwd
            else:
                raise MissingWitnessError(f"schedule lacks the '{name}' witness")

        def chi(k: int) -> int:
            return max(sigma2(4 * K * (k + 1) - 1), theta1(4 * K * (k + 1) - 1))
    else:
        raise ValueError(f"unknown variant {variant!r}")

    def fn(k: int) -> int:
        inner = chi(2 * k + 1) + 1 + ceil_ln(4 * K * (k + 1))
        return sigma1_plus(ceil_frac(Fraction(inner) / one_minus) + 1)

    return Modulus(fn, Role.ASYMPTOTIC_REGULARITY, f"step_asreg[{variant}]")


def moving_asreg_rate(phi: Modulus, schedule: Schedule, K: int) -> Modulus:
    """Rate for d(x_n, T_n x_n) -> 0 from a step rate and vanishing damping."""
    K = _check_K(K)
    sigma3 = schedule.witnesses.require("alpha_to_zero")

    def fn(k: int) -> int:
        return max(sigma3(4 * K * (k + 1) - 1), phi(2 * k + 1))

    return Modulus(fn, Role.ASYMPTOTIC_REGULARITY, "moving_asreg")


def frozen_asreg_rate(psi: Modulus, schedule: Schedule, m: int,
                      cap_m: Optional[int] = None) -> Modulus:
    """Rate for d(x_n, T_m x_n) -> 0 at a frozen index m.

    ``cap_m`` must be an integer upper bound on lambda_m; computed exactly
    from the schedule when omitted.
    """
    w = schedule.witnesses
    cap = w.require("lambda_floor_inv")
    n_floor = w.require("lambda_floor_from")
    lam_m = Fraction(schedule.lambdas(m))
    if cap_m is None:
        cap_m = ceil_frac(lam_m)
    if cap_m < lam_m:
        raise ValueError(f"cap_m={cap_m} is below lambda_{m}={lam_m}")
    if cap_m < 1:
        raise ValueError("cap_m must be a positive integer")

    def fn(k: int) -> int:
        return max(n_floor, psi(cap_m * cap * (k + 1) - 1), psi(2 * k + 1))

    return Modulus(fn, Role.ASYMPTOTIC_REGULARITY, f"frozen_asreg[{m}]")


# --------------------------------------------------------------------------
# the implicit-companion gap and the limit-map suite


def companion_gap_rate(schedule: Schedule, alpha: Rational, K: int) -> Modulus:
    """Rate of convergence to 0 of d(x_n, y_n), the gap to the implicit
    companion points.  Requires the divergence, difference-ratio and
    step-size-limit witnesses; schedules without a difference-ratio witness
    (the plain harmonic one) are rejected.
    """
    one_minus = _one_minus(alpha)
    K = _check_K(K)
    w = schedule.witnesses
    sigma1 = w.require("alpha_divergence")
    sigma4 = w.require("alpha_ratio_to_zero")
    theta4 = w.require("lambda_to_limit")
    lam = w.require("lambda_limit")

    def psi(k: int) -> int:
        i = ceil_frac(Fraction(4 * K * (k + 1)) / (lam * one_minus)) - 1
        j = ceil_frac(Fraction(4 * K * (k + 1)) / one_minus**2) - 1
        return max(theta4(i), sigma4(j))

    def fn(k: int) -> int:
        inner = psi(2 * k + 1) + ceil_ln(4 * K * (k + 1))
        return sigma1(ceil_frac(Fraction(inner) / one_minus)) + 1

    return Modulus(fn, Role.CONVERGENCE, "companion_gap")


def limit_map_suite(gap_rate: Modulus, schedule: Schedule, K: int,
                    frozen_gaps: Optional[Dict[int, int]] = None,
                    ) -> tuple[Modulus, Modulus, Dict[int, Modulus]]:
    """Rates for the limit-member residual d(x_n, T_limit x_n), for the
    moving residual via the limit member, and for frozen indices.

    ``frozen_gaps`` maps each frozen index m to an integer bound on
    |lambda_limit - lambda_m| (computed exactly when omitted).  Requires the
    vanishing-damping witness.
    """
    K = _check_K(K)
    w = schedule.witnesses
    sigma3 = w.require("alpha_to_zero")
    theta4 = w.require("lambda_to_limit")
    gap_l = w.require("limit_gap")
    lam = w.require("lambda_limit")
    if not lam > Fraction(1, gap_l + 1):
        raise ValueError(f"need lambda_limit > 1/(l+1); got {lam} vs l={gap_l}")

    def tilde_fn(k: int) -> int:
        return max(sigma3(4 * K * (k + 1) - 1), gap_rate(4 * k + 3))

    tilde = Modulus(tilde_fn, Role.ASYMPTOTIC_REGULARITY, "limit_residual")

    moving = Modulus(lambda k: max(theta4(gap_l), tilde(2 * k + 1)),
                     Role.ASYMPTOTIC_REGULARITY, "moving_via_limit")

    frozen: Dict[int, Modulus] = {}
    for m, bound in (frozen_gaps or {}).items():
        exact_gap = abs(lam - Fraction(schedule.lambdas(m)))
        if bound is None:
            bound = ceil_frac(exact_gap)
        if bound < exact_gap:
            raise ValueError(f"frozen gap bound {bound} below |limit-lambda_{m}|={exact_gap}")
        factor = 1 + (gap_l + 1) * bound
        frozen[m] = Modulus(
            lambda k, factor=factor: tilde(factor * (k + 1) - 1),
            Role.ASYMPTOTIC_REGULARITY, f"frozen_via_limit[{m}]")
    return tilde, moving, frozen


# --------------------------------------------------------------------------
# linear rates for the harmonic presets


def linear_rate_suite(alpha: Rational, K: int) -> tuple[Modulus, Modulus, Modulus]:
    """Linear rates for the harmonic schedule: step residual, moving residual,
    and frozen residual (any frozen index)."""
    a = Fraction(alpha)
    _one_minus(a)
    K = _check_K(K)
    J = 2 * ceil_frac(1 / (1 - a))
    J0 = 6 * ceil_frac(1 / (1 - a)) ** 2

    step = Modulus(lambda k: J0 * K * (k + 1) - J,
                   Role.ASYMPTOTIC_REGULARITY, "linear_step")
    moving = Modulus(lambda k: (J0 + 2 * J) * K * (k + 1) - J,
                     Role.ASYMPTOTIC_REGULARITY, "linear_moving")
    frozen = Modulus(lambda k: (2 * J0 + 4 * J) * K * (k + 1) - J,
                     Role.ASYMPTOTIC_REGULARITY, "linear_frozen")
    return step, moving, frozen


def shifted_linear_asreg_rate(alpha: Rational, K: int) -> Modulus:
    """Linear step-residual rate for the shifted harmonic schedule."""
    a = Fraction(alpha)
    _one_minus(a)
    K = _check_K(K)
    J = 2 * ceil_frac(1 / (1 - a)) + 1
    lead = ceil_frac(Fraction(3 * J**2 * K, 2))
    return Modulus(lambda k: lead * (k + 1) - J,
                   Role.ASYMPTOTIC_REGULARITY, "shifted_linear_step")


# --------------------------------------------------------------------------
# pointwise family convergence


def family_cauchy_rate(schedule: Schedule, d_xz: Union[Rational, float],
                       x_in_fixed_set: bool = False) -> Modulus:
    """Cauchy modulus for the sequence (T_n x) at a fixed point x of the space.

    ``d_xz`` is the distance from x to the common fixed point witness.
    """
    w = schedule.witnesses
    theta4 = w.require("lambda_to_limit")
    gap_l = w.require("limit_gap")
    lam = w.require("lambda_limit")
    if x_in_fixed_set:
        return Modulus(lambda k: 0, Role.CAUCHY, "family_cauchy[fixed]")
    denom = lam * (gap_l + 1) - 1
    if denom <= 0:
        raise ValueError("need lambda_limit > 1/(l+1)")
    if isinstance(d_xz, (int, Fraction)):
        L = Fraction(2 * (gap_l + 1)) * Fraction(d_xz) / denom
        ceil_L = lambda k: ceil_frac(L * (k + 1))
    else:
        Lf = 2.0 * (gap_l + 1) * float(d_xz) / float(denom)
        # float path: bump when within guard of an integer, enlarging is sound
        def ceil_L(k: int) -> int:
            v = Lf * (k + 1)
            c = math.ceil(v)
            return c + 1 if c - v <= 1e-9 else c

    def fn(k: int) -> int:
        return max(theta4(gap_l), theta4(2 * ceil_L(k) - 1))

    return Modulus(fn, Role.CAUCHY, "family_cauchy")


# --------------------------------------------------------------------------
# metastability


def companion_meta_rate(M: int, schedule: Schedule,
                        variant: str = "auto") -> MetaRate:
    """Metastability witness for the implicit companion points of the
    anchored scheme.

    ``M`` bounds d(companion_n, anchor); pass 3*K for the unbounded case or
    a diameter bound.  ``nonincreasing`` uses the plain counter-function
    tower; ``vanishing`` routes through the vanishing-damping witness and
    the damping lower bound.
    """
    if M < 1:
        raise ValueError(f"M must be a positive integer, got {M}")
    w = schedule.witnesses
    if variant == "auto":
        variant = "nonincreasing" if w.nonincreasing_alpha else "vanishing"

    if variant == "nonincreasing":
        if not w.nonincreasing_alpha:
            raise MissingWitnessError("schedule is not flagged nonincreasing")

        def fn(k: int, g) -> int:
            return iterate(g_tilde(g), M**2 * (k + 1) ** 2, 0)

        return MetaRate(fn, "companion_meta[nonincreasing]")

    if variant == "vanishing":
        sigma3 = w.require("alpha_to_zero")
        h = w.require("alpha_lower_inv")
        sigma3_plus = g_plus(sigma3)
        h_plus = g_plus(h)

        def fn(k: int, g) -> int:
            gt = g_tilde(g)
            g_h = lambda n: h_plus(gt(sigma3(n)))
            return sigma3_plus(iterate(g_h, 4 * M**2 * (k + 1) ** 2, 0))

        return MetaRate(fn, "companion_meta[vanishing]")

    raise ValueError(f"unknown variant {variant!r}")


def anchored_meta_rate(gap_rate: Modulus, companion_meta: MetaRate) -> MetaRate:
    """Metastability witness for the anchored scheme itself, transferring the
    companion witness across the vanishing gap."""
    return meta_transfer(companion_meta, gap_rate)


def _touch_depth(level: int) -> None:
    budget = _ACTIVE_BUDGET.get()
    if budget is not None and level > budget.max_depth_seen:
        budget.max_depth_seen = level


def viscosity_meta_rate(anchored_meta_M: MetaRate, schedule: Schedule,
                        alpha: Rational, M: int) -> MetaRate:
    """Metastability witness for the full scheme with a genuine contraction,
    on a convex set of diameter at most M.

    Implements the nested tower: the localized/monotone shifts of the
    anchored witness, the divergence-based threshold map, and the
    level-indexed counter-function recursion, evaluated innermost-first.
    Evaluation is budget-guarded; the recursion level reached is recorded on
    the active budget for diagnostics.
    """
    a = Fraction(alpha)
    if not 0 < a < 1:
        raise ValueError(
            "the tower needs a contraction factor in (0,1); for the anchored "
            "scheme use anchored_meta_rate instead")
    if M < 1:
        raise ValueError(f"M must be a positive integer, got {M}")
    sigma1_plus = g_plus(schedule.witnesses.require("alpha_divergence"))
    one_minus = 1 - a

    def sigma_star(n: int) -> int:
        return sigma1_plus(ceil_frac(Fraction(n) / one_minus))

    def beta(eps: Fraction, n: int) -> int:
        return sigma_star(n + ceil_ln(Fraction(2 * M) / eps)) + 1

    def phi_dag(k: int, g, n: int) -> int:
        best = 0
        budget = _ACTIVE_BUDGET.get()
        for i in range(n + 1):
            if budget is not None:
                budget.tick()
            v = i + anchored_meta_M(k, g_shift(g, i))
            if v > best:
                best = v
        return best

    def phi_tilde(eps: Fraction, g, n: int) -> int:
        return phi_dag(ceil_frac(1 / eps) - 1, g, n)

    def fn(k: int, g) -> int:
        eps = Fraction(1, k + 1)
        gt = g_tilde(g)
        eps_t = eps * one_minus / 9
        eps0 = eps_t * one_minus / 2
        L = ceil_log_base(eps_t / (2 * M), a)
        if L < 0:
            L = 0

        def F0(q: int) -> int:
            b = beta(eps / 3, q)
            return max(gt(b), b)

        levels: list = [F0]
        for i in range(L):
            def Fi(q: int, prev=levels[i], level=i + 1) -> int:
                _touch_depth(level)
                return max(F0(q), phi_tilde(eps0, prev, q))

            levels.append(Fi)

        psi = 0
        for i in range(L + 1):
            _touch_depth(L - i)
            psi = phi_tilde(eps0, levels[L - i], psi)
        return beta(eps / 3, psi)

    return MetaRate(fn, "viscosity_meta")
