"""Parameter sequences for the iterations, with quantitative witnesses.

A schedule carries the damping sequence (alpha_n) in (0,1], the step-size
sequence (lambda_n) in (0,inf), and whatever witnesses hold for them:

  alpha_divergence      rate of divergence of sum alpha_n
  alpha_diff_cauchy     Cauchy modulus of sum |alpha_n - alpha_{n+1}|
  alpha_to_zero         rate of convergence of alpha_n -> 0
  alpha_ratio_to_zero   rate of convergence of |alpha_{n+1}-alpha_n| / alpha_n^2 -> 0
  ratio_fwd_cauchy      Cauchy modulus of sum |1 - lambda_{n+1}/lambda_n|
  ratio_bwd_cauchy      Cauchy modulus of sum |1 - lambda_n/lambda_{n+1}|
  lambda_diff_cauchy    Cauchy modulus of sum |lambda_n - lambda_{n+1}|
  lambda_to_limit       rate of convergence of lambda_n -> lambda_limit
  lambda_floor_inv / lambda_floor_from
                        lambda_n >= 1/lambda_floor_inv for n >= lambda_floor_from
  alpha_lower_inv       alpha_n >= 1/(h(n)+1)

The library never infers a witness from data: presets attach the witnesses
their closed forms justify, custom schedules must supply every witness they
claim, and the verifier checks all of them empirically on prefixes.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Callable, Optional, Union

from .moduli import (
    Modulus,
    Role,
    ceil_frac,
    ceil_root,
    ceil_sqrt,
    g_plus,
    monus,
)

__all__ = [
    "Witnesses",
    "Schedule",
    "MissingWitnessError",
    "harmonic_schedule",
    "power34_schedule",
    "shifted_harmonic_schedule",
    "power_decay_schedule",
    "custom_schedule",
    "derive_alpha_divergence",
    "derive_lambda_witnesses",
    "PRESETS",
]

Rational = Union[int, Fraction]


class MissingWitnessError(ValueError):
    """A rate construction asked for a witness the schedule does not carry."""


@dataclass(frozen=True)
class Witnesses:
    alpha_divergence: Optional[Modulus] = None
    alpha_diff_cauchy: Optional[Modulus] = None
    alpha_to_zero: Optional[Modulus] = None
    alpha_ratio_to_zero: Optional[Modulus] = None
    ratio_fwd_cauchy: Optional[Modulus] = None
    ratio_bwd_cauchy: Optional[Modulus] = None
    lambda_diff_cauchy: Optional[Modulus] = None
    lambda_to_limit: Optional[Modulus] = None
    lambda_floor_inv: Optional[int] = None
    lambda_floor_from: Optional[int] = None
    lambda_limit: Optional[Fraction] = None
    limit_gap: Optional[int] = None  # l with lambda_limit > 1/(l+1)
    alpha_lower_inv: Optional[Modulus] = None  # h with alpha_n >= 1/(h(n)+1)
    alpha_floor: Optional[Fraction] = None
    nonincreasing_alpha: bool = False

    def require(self, name: str) -> object:
        value = getattr(self, name)
        if value is None:
            raise MissingWitnessError(f"schedule lacks the '{name}' witness")
        return value


@dataclass(frozen=True)
class Schedule:
    """Damping and step-size sequences plus their attached witnesses."""

    name: str
    alpha: Callable[[int], Union[Fraction, float]]
    lambdas: Callable[[int], Fraction]
    witnesses: Witnesses
    exact_alpha: bool = True
    J: Optional[int] = None
    built_for_alpha: Optional[Fraction] = None  # contraction factor baked into presets

    def alpha_float(self, n: int) -> float:
        return float(self.alpha(n))

    def lambda_float(self, n: int) -> float:
        return float(self.lambdas(n))


def _modulus(fn, role, desc) -> Modulus:
    return Modulus(fn, role, desc)


# --------------------------------------------------------------------------
# presets


def harmonic_schedule(alpha: Rational) -> Schedule:
    """alpha_n = 2/((1-a)(n+J)), lambda_n = (n+J)/(n+J-1), J = 2*ceil(1/(1-a)).

    The harmonic decay gives linear rates.  The difference-ratio sequence
    |alpha_{n+1}-alpha_n| / alpha_n^2 tends to (1-a)/2 != 0, so no witness
    for it exists and none is attached.
    """
    a = Fraction(alpha)
    if not 0 <= a < 1:
        raise ValueError(f"contraction factor must lie in [0,1), got {a}")
    J = 2 * ceil_frac(1 / (1 - a))
    one_minus = 1 - a

    def alpha_n(n: int) -> Fraction:
        return Fraction(2) / (one_minus * (n + J))

    def lambda_n(n: int) -> Fraction:
        return Fraction(n + J, n + J - 1)

    w = Witnesses(
        alpha_divergence=_modulus(
            lambda n: 4 ** (ceil_frac(one_minus * n / 2) + J - 1) - J,
            Role.DIVERGENCE, "harmonic:alpha_divergence"),
        alpha_diff_cauchy=_modulus(
            lambda k: monus(ceil_frac(2 * (k + 1) / one_minus), J + 1),
            Role.CAUCHY, "harmonic:alpha_diff_cauchy"),
        alpha_to_zero=_modulus(
            lambda k: monus(ceil_frac(2 * (k + 1) / one_minus), J),
            Role.CONVERGENCE, "harmonic:alpha_to_zero"),
        lambda_diff_cauchy=_modulus(
            lambda k: monus(k + 1, J), Role.CAUCHY, "harmonic:lambda_diff_cauchy"),
        lambda_to_limit=_modulus(
            lambda k: monus(k + 2, J), Role.CONVERGENCE, "harmonic:lambda_to_limit"),
        lambda_floor_inv=1,
        lambda_floor_from=0,
        lambda_limit=Fraction(1),
        limit_gap=1,
        nonincreasing_alpha=True,
    )
    return Schedule("harmonic", alpha_n, lambda_n, w, exact_alpha=True, J=J,
                    built_for_alpha=a)


def power34_schedule() -> Schedule:
    """alpha_n = (n+2)^(-3/4) with the oscillating steps lambda_n = 1 + (-1)^n/(n+1).

    The step ratios are not summable here, so only the limit-type witnesses
    are attached for (lambda_n).
    """

    def alpha_n(n: int) -> float:
        return float(n + 2) ** -0.75

    def lambda_n(n: int) -> Fraction:
        return 1 + Fraction((-1) ** n, n + 1)

    w = Witnesses(
        alpha_divergence=_modulus(lambda k: (k + 1) ** 4, Role.DIVERGENCE,
                                  "power34:alpha_divergence"),
        alpha_ratio_to_zero=_modulus(lambda k: (k + 1) ** 4 + 1, Role.CONVERGENCE,
                                     "power34:alpha_ratio_to_zero"),
        alpha_diff_cauchy=_modulus(lambda k: monus(ceil_root((k + 1) ** 4, 3), 3),
                                   Role.CAUCHY, "power34:alpha_diff_cauchy"),
        alpha_to_zero=_modulus(lambda k: monus(ceil_root((k + 1) ** 4, 3), 2),
                               Role.CONVERGENCE, "power34:alpha_to_zero"),
        lambda_to_limit=_modulus(lambda k: k, Role.CONVERGENCE, "power34:lambda_to_limit"),
        lambda_floor_inv=2,
        lambda_floor_from=0,
        lambda_limit=Fraction(1),
        limit_gap=1,
        nonincreasing_alpha=True,
    )
    return Schedule("power34", alpha_n, lambda_n, w, exact_alpha=False, J=None,
                    built_for_alpha=Fraction(0))


def shifted_harmonic_schedule(alpha: Rational, alpha_floor: Rational) -> Schedule:
    """alpha_n = floor + 2/((1-a)(n+J)), lambda_n = (n+J)/(n+J-1),
    J = 2*ceil(1/(1-a)) + 1, with floor in (0, (1-a)/(3-a)].

    The positive floor keeps the divergence witness linear while the
    difference-ratio witness exists; alpha_n does not tend to zero, so no
    vanishing witness is attached.
    """
    a = Fraction(alpha)
    floor = Fraction(alpha_floor)
    if not 0 <= a < 1:
        raise ValueError(f"contraction factor must lie in [0,1), got {a}")
    hi = (1 - a) / (3 - a)
    if not 0 < floor <= hi:
        raise ValueError(f"alpha_floor must lie in (0, {hi}], got {floor}")
    J = 2 * ceil_frac(1 / (1 - a)) + 1
    one_minus = 1 - a

    def alpha_n(n: int) -> Fraction:
        return floor + Fraction(2) / (one_minus * (n + J))

    def lambda_n(n: int) -> Fraction:
        return Fraction(n + J, n + J - 1)

    ratio_const = ceil_frac(2 / (floor**2 * one_minus))

    w = Witnesses(
        alpha_divergence=_modulus(
            lambda n: min(4 ** (ceil_frac(one_minus * n / 2) + J - 1) - J,
                          monus(ceil_frac(Fraction(n) / floor), 1)),
            Role.DIVERGENCE, "shifted:alpha_divergence"),
        alpha_diff_cauchy=_modulus(
            lambda k: monus(ceil_frac(2 * (k + 1) / one_minus), J + 1),
            Role.CAUCHY, "shifted:alpha_diff_cauchy"),
        alpha_ratio_to_zero=_modulus(
            lambda k: monus(ceil_sqrt(ratio_const * (k + 1)), J),
            Role.CONVERGENCE, "shifted:alpha_ratio_to_zero"),
        lambda_diff_cauchy=_modulus(
            lambda k: monus(k + 1, J), Role.CAUCHY, "shifted:lambda_diff_cauchy"),
        lambda_to_limit=_modulus(
            lambda k: monus(k + 2, J), Role.CONVERGENCE, "shifted:lambda_to_limit"),
        lambda_floor_inv=1,
        lambda_floor_from=0,
        lambda_limit=Fraction(1),
        limit_gap=1,
        alpha_lower_inv=_modulus(lambda n: ceil_frac(1 / floor) - 1, Role.CONVERGENCE,
                                 "shifted:alpha_lower_inv"),
        alpha_floor=floor,
        nonincreasing_alpha=True,
    )
    return Schedule("shifted_harmonic", alpha_n, lambda_n, w, exact_alpha=True, J=J,
                    built_for_alpha=a)


def power_decay_schedule(p: int, q: int) -> Schedule:
    """alpha_n = (n+2)^(-p/q) with 1 <= p < q, lambda_n = (n+2)/(n+1).

    A hypothesis-complete instance: unlike the shifted preset it carries a
    vanishing witness for alpha_n, and unlike the oscillating one its step
    sizes are monotone with summable differences.  Witness closed forms come
    from integral comparison, with exact integer root extraction.
    """
    if not 1 <= p < q:
        raise ValueError(f"need 1 <= p < q, got p={p}, q={q}")
    e = Fraction(p, q)

    def alpha_n(n: int) -> float:
        return float(n + 2) ** (-float(e))

    def lambda_n(n: int) -> Fraction:
        return Fraction(n + 2, n + 1)

    qp = q - p

    w = Witnesses(
        # sum_{i<=m} (i+2)^(-e) >= ((m+3)^(1-e) - 2^(1-e))/(1-e), and 2^(1-e) <= 2
        alpha_divergence=_modulus(
            lambda n: monus(ceil_root(Fraction(qp * n + 2 * q, q) ** q, qp), 3),
            Role.DIVERGENCE, f"power_decay[{p}/{q}]:alpha_divergence"),
        alpha_diff_cauchy=_modulus(
            lambda k: monus(ceil_root((k + 1) ** q, p), 3),
            Role.CAUCHY, f"power_decay[{p}/{q}]:alpha_diff_cauchy"),
        alpha_to_zero=_modulus(
            lambda k: monus(ceil_root((k + 1) ** q, p), 2),
            Role.CONVERGENCE, f"power_decay[{p}/{q}]:alpha_to_zero"),
        # |alpha_{n+1}-alpha_n|/alpha_n^2 <= e*(n+2)^(e-1), by the mean value theorem
        alpha_ratio_to_zero=_modulus(
            lambda k: monus(ceil_root(Fraction(p * (k + 1), q) ** q, qp), 2),
            Role.CONVERGENCE, f"power_decay[{p}/{q}]:alpha_ratio_to_zero"),
        lambda_diff_cauchy=_modulus(lambda k: monus(k, 1), Role.CAUCHY,
                                    f"power_decay[{p}/{q}]:lambda_diff_cauchy"),
        lambda_to_limit=_modulus(lambda k: k, Role.CONVERGENCE,
                                 f"power_decay[{p}/{q}]:lambda_to_limit"),
        lambda_floor_inv=1,
        lambda_floor_from=0,
        lambda_limit=Fraction(1),
        limit_gap=1,
        nonincreasing_alpha=True,
    )
    return Schedule(f"power_decay_{p}_{q}", alpha_n, lambda_n, w, exact_alpha=False,
                    J=2, built_for_alpha=Fraction(0))


def custom_schedule(name: str,
                    alpha: Callable[[int], Union[Fraction, float]],
                    lambdas: Callable[[int], Fraction],
                    witnesses: Witnesses,
                    exact_alpha: bool = True,
                    check_prefix: int = 50) -> Schedule:
    """Wrap user-supplied sequences; ranges are validated on a prefix."""
    for n in range(check_prefix):
        a = alpha(n)
        lam = lambdas(n)
        if not 0 < a <= 1:
            raise ValueError(f"alpha({n}) = {a} outside (0, 1]")
        if not lam > 0:
            raise ValueError(f"lambda({n}) = {lam} not positive")
    return Schedule(name, alpha, lambdas, witnesses, exact_alpha=exact_alpha)


PRESETS = {
    "harmonic": harmonic_schedule,
    "power34": power34_schedule,
    "shifted_harmonic": shifted_harmonic_schedule,
    "power_decay": power_decay_schedule,
}


# --------------------------------------------------------------------------
# derived witnesses


def derive_alpha_divergence(schedule: Schedule, alpha: Rational) -> tuple[Modulus, Modulus]:
    """Divergence witnesses for sum (1-a)*alpha_n and sum (1-a)*alpha_{n+1}."""
    a = Fraction(alpha)
    if not 0 <= a < 1:
        raise ValueError(f"contraction factor must lie in [0,1), got {a}")
    sigma1 = schedule.witnesses.require("alpha_divergence")
    sigma1_plus = g_plus(sigma1)
    one_minus = 1 - a

    theta = Modulus(lambda n: sigma1(ceil_frac(Fraction(n) / one_minus)),
                    Role.DIVERGENCE, "scaled_alpha_divergence")
    theta_star = Modulus(
        lambda n: monus(sigma1_plus(ceil_frac(Fraction(n) / one_minus) + 1), 1),
        Role.DIVERGENCE, "scaled_shifted_alpha_divergence")
    return theta, theta_star


def derive_lambda_witnesses(schedule: Schedule) -> tuple[Modulus, Modulus, Modulus]:
    """Ratio-series Cauchy moduli from the floor and difference witnesses, and
    a Cauchy modulus for (lambda_n) itself from its convergence rate."""
    w = schedule.witnesses
    cap = w.require("lambda_floor_inv")
    n_floor = w.require("lambda_floor_from")
    theta2 = w.require("lambda_diff_cauchy")

    def ratio_fn(k: int) -> int:
        return max(n_floor, theta2(cap * (k + 1) - 1))

    theta1 = Modulus(ratio_fn, Role.CAUCHY, "ratio_fwd_cauchy(derived)")
    theta1_star = Modulus(ratio_fn, Role.CAUCHY, "ratio_bwd_cauchy(derived)")

    theta4 = w.require("lambda_to_limit")
    theta4_star = Modulus(lambda k: theta4(2 * k + 1), Role.CAUCHY,
                          "lambda_cauchy(derived)")
    return theta1, theta1_star, theta4_star


def with_derived_ratio_witnesses(schedule: Schedule) -> Schedule:
    """Attach the derived ratio-series moduli when absent but derivable."""
    w = schedule.witnesses
    if w.ratio_fwd_cauchy is not None and w.ratio_bwd_cauchy is not None:
        return schedule
    if w.lambda_floor_inv is None or w.lambda_diff_cauchy is None:
        return schedule
    theta1, theta1_star, _ = derive_lambda_witnesses(schedule)
    new_w = replace(w, ratio_fwd_cauchy=w.ratio_fwd_cauchy or theta1,
                    ratio_bwd_cauchy=w.ratio_bwd_cauchy or theta1_star)
    return replace(schedule, witnesses=new_w)
