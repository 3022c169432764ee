"""Quantitative moduli on the naturals and their combinators.

A modulus is a total function N -> N acting as an explicit witness for a
limit statement: a rate of convergence, a Cauchy modulus, a rate of
divergence of a series, or a rate of asymptotic regularity.  Metastability
witnesses take an extra counter function argument.  All arithmetic is over
Python's arbitrary-precision integers; subtraction on naturals is truncated
at zero throughout.

Every combinator in this module enlarges only soundly: a larger threshold is
always still a valid threshold, so ceilings of logarithms are rounded up with
a guard against float error.
"""

from __future__ import annotations

import math
from contextvars import ContextVar
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Callable, Iterable, Optional, Union

import mpmath

__all__ = [
    "Role",
    "Modulus",
    "MetaRate",
    "Budget",
    "BudgetExceeded",
    "BudgetExceededError",
    "monus",
    "ceil_frac",
    "ceil_root",
    "ceil_sqrt",
    "ceil_ln",
    "ceil_log_base",
    "g_tilde",
    "g_plus",
    "g_shift",
    "iterate",
    "budget_scope",
    "budgeted",
    "cauchy_from_conv",
    "divergence_tail_shift",
    "divergence_scale",
    "divergence_sum",
    "combine_linear",
    "xu_rate",
    "sabach_shtern_bound",
    "meta_from_cauchy",
    "meta_plus",
    "meta_dagger",
    "meta_to_eps",
    "meta_from_eps",
    "meta_transfer",
    "lmeta_from_asreg",
]

Rational = Union[int, Fraction]
IntFn = Callable[[int], int]


class Role(Enum):
    """Semantic role of a modulus."""

    CONVERGENCE = "rate of convergence"
    CAUCHY = "Cauchy modulus"
    DIVERGENCE = "rate of divergence"
    ASYMPTOTIC_REGULARITY = "rate of asymptotic regularity"


# --------------------------------------------------------------------------
# exact integer arithmetic helpers


def monus(m: int, n: int) -> int:
    """Truncated subtraction on naturals: max(m - n, 0)."""
    return m - n if m > n else 0


def ceil_frac(q: Rational) -> int:
    """Exact ceiling of a rational, no floating point involved."""
    q = Fraction(q)
    return -((-q.numerator) // q.denominator)


def ceil_root(x: Rational, r: int) -> int:
    """Exact ceiling of x**(1/r) for x >= 0 and integer r >= 1.

    Returns the least natural m with m**r >= x, by binary search on integers.
    """
    if r < 1:
        raise ValueError(f"root index must be >= 1, got {r}")
    x = Fraction(x)
    if x < 0:
        raise ValueError("negative radicand")
    if x == 0:
        return 0
    p, q = x.numerator, x.denominator
    hi = 1 << (((p // q + 1).bit_length() + r - 1) // r + 1)
    lo = 0
    while lo + 1 < hi:
        mid = (lo + hi) // 2
        if mid**r * q >= p:
            hi = mid
        else:
            lo = mid
    return hi


def ceil_sqrt(n: int) -> int:
    """Exact ceiling of sqrt(n) for a natural n."""
    if n < 0:
        raise ValueError("negative radicand")
    if n == 0:
        return 0
    s = math.isqrt(n - 1)
    return s + 1


_NEAR_INT_GUARD = 1e-9


def _ceil_guarded(value: mpmath.mpf) -> int:
    """Ceiling of an extended-precision value, bumped by one when the value
    sits within 1e-9 of an integer.

    Over-approximating a threshold keeps it valid; under-approximating does
    not, hence the asymmetric guard.
    """
    nearest = mpmath.nint(value)
    if abs(value - nearest) <= _NEAR_INT_GUARD:
        return int(nearest) + 1
    return int(mpmath.ceil(value))


def ceil_ln(x: Rational) -> int:
    """Sound over-approximation of ceil(ln(x)) for rational x > 0."""
    x = Fraction(x)
    if x <= 0:
        raise ValueError(f"ln requires a positive argument, got {x}")
    if x == 1:
        return 0
    with mpmath.workdps(50):
        v = mpmath.log(mpmath.mpf(x.numerator)) - mpmath.log(mpmath.mpf(x.denominator))
        return _ceil_guarded(v)


def ceil_log_base(x: Rational, base: Rational) -> int:
    """Sound over-approximation of ceil(log_base(x)) for base in (0,1), x in (0,1]."""
    x = Fraction(x)
    base = Fraction(base)
    if not 0 < base < 1:
        raise ValueError(f"base must lie in (0,1), got {base}")
    if not 0 < x <= 1:
        raise ValueError(f"argument must lie in (0,1], got {x}")
    if x == 1:
        return 0
    with mpmath.workdps(50):
        num = mpmath.log(mpmath.mpf(x.numerator)) - mpmath.log(mpmath.mpf(x.denominator))
        den = mpmath.log(mpmath.mpf(base.numerator)) - mpmath.log(mpmath.mpf(base.denominator))
        return _ceil_guarded(num / den)


# --------------------------------------------------------------------------
# evaluation budget

DEFAULT_CEILING = 10**12


class BudgetExceededError(RuntimeError):
    """Raised internally when a rate evaluation crosses its budget."""

    def __init__(self, message: str, depth: Optional[int] = None, ops: int = 0):
        super().__init__(message)
        self.depth = depth
        self.ops = ops


@dataclass
class BudgetExceeded:
    """Outcome of a budgeted evaluation that crossed its ceiling."""

    reason: str
    depth: Optional[int] = None
    ops: int = 0


@dataclass
class Budget:
    """Guard for rate evaluations whose values or work can explode.

    ``ceiling`` bounds every intermediate natural produced; ``max_ops``
    bounds the number of primitive evaluation steps, since towers can become
    time-infeasible long before their values overflow any ceiling.
    """

    ceiling: Optional[int] = DEFAULT_CEILING
    max_ops: Optional[int] = 10**7
    ops: int = field(default=0, repr=False)
    depth: int = field(default=0, repr=False)
    max_depth_seen: int = field(default=0, repr=False)

    def check(self, value: int) -> int:
        if self.ceiling is not None and value > self.ceiling:
            raise BudgetExceededError(
                f"value {value} exceeds ceiling {self.ceiling}",
                depth=self.max_depth_seen,
                ops=self.ops,
            )
        return value

    def tick(self, n: int = 1) -> None:
        self.ops += n
        if self.max_ops is not None and self.ops > self.max_ops:
            raise BudgetExceededError(
                f"operation count exceeds {self.max_ops}",
                depth=self.max_depth_seen,
                ops=self.ops,
            )


_ACTIVE_BUDGET: ContextVar[Optional[Budget]] = ContextVar("vamcert_budget", default=None)


class budget_scope:
    """Context manager installing a Budget for nested rate evaluations."""

    def __init__(self, budget: Budget):
        self.budget = budget
        self._token = None

    def __enter__(self) -> Budget:
        self._token = _ACTIVE_BUDGET.set(self.budget)
        return self.budget

    def __exit__(self, *exc) -> None:
        _ACTIVE_BUDGET.reset(self._token)


def _checked(value: int) -> int:
    budget = _ACTIVE_BUDGET.get()
    if budget is not None:
        budget.check(value)
    return value


def _tick(n: int = 1) -> None:
    budget = _ACTIVE_BUDGET.get()
    if budget is not None:
        budget.tick(n)


def budgeted(fn: Callable[..., int], *args,
             ceiling: Optional[int] = DEFAULT_CEILING,
             max_ops: Optional[int] = 10**7) -> Union[int, BudgetExceeded]:
    """Evaluate ``fn(*args)`` under a budget, mapping overflow to an outcome."""
    budget = Budget(ceiling=ceiling, max_ops=max_ops)
    try:
        with budget_scope(budget):
            return fn(*args)
    except BudgetExceededError as exc:
        return BudgetExceeded(reason=str(exc), depth=exc.depth, ops=exc.ops)


# --------------------------------------------------------------------------
# core types


@dataclass(frozen=True)
class Modulus:
    """A total function N -> N tagged with its semantic role.

    Instances are immutable and close over any constants they need at
    construction time, so repeated evaluation is pure and thread-safe;
    purity also makes results safe to memoize.
    """

    fn: IntFn
    role: Role
    description: str = ""

    def __post_init__(self):
        object.__setattr__(self, "_memo", {})

    def __call__(self, k: int) -> int:
        memo = self._memo
        if k in memo:
            return _checked(memo[k])
        if k < 0:
            raise ValueError(f"modulus argument must be a natural, got {k}")
        value = self.fn(k)
        if value < 0:
            raise ValueError(f"{self.description or 'modulus'} returned {value} at {k}")
        _tick()
        memo[k] = value
        return _checked(value)

    def with_role(self, role: Role, description: Optional[str] = None) -> "Modulus":
        return Modulus(self.fn, role, description if description is not None else self.description)


@dataclass(frozen=True)
class MetaRate:
    """A metastability witness: total on (k, counter function) pairs."""

    fn: Callable[[int, IntFn], int]
    description: str = ""

    def __call__(self, k: int, g: IntFn) -> int:
        if k < 0:
            raise ValueError(f"metastability argument must be a natural, got {k}")
        value = self.fn(k, g)
        if value < 0:
            raise ValueError(f"{self.description or 'meta rate'} returned {value}")
        _tick()
        return _checked(value)


def identity(k: int) -> int:
    return k


def const(c: int) -> IntFn:
    return lambda _k: c


# --------------------------------------------------------------------------
# counter-function calculus


def g_tilde(g: IntFn) -> IntFn:
    """n |-> n + g(n); always >= n."""
    return lambda n: n + g(n)


def g_plus(g: IntFn) -> IntFn:
    """Monotone envelope n |-> max(g(0..n)); incremental scan with a cache."""
    seen: list[int] = []  # seen[i] = max(g(0..i))

    def plus(n: int) -> int:
        while len(seen) <= n:
            _tick()
            i = len(seen)
            v = g(i)
            seen.append(v if not seen else max(seen[-1], v))
        return seen[n]

    return plus


def g_shift(g: IntFn, n: int) -> IntFn:
    """The shifted counter function m |-> n + g(n + m)."""
    return lambda m: n + g(n + m)


def iterate(g: IntFn, times: int, start: int = 0) -> int:
    """times-fold iterate of g applied to start, with budget checks."""
    value = start
    for _ in range(times):
        _tick()
        value = _checked(g(value))
    return value


# --------------------------------------------------------------------------
# combinators on sequence witnesses


def cauchy_from_conv(phi: Modulus) -> Modulus:
    """Turn a rate of convergence into a Cauchy modulus: k |-> phi(2k+1)."""
    if phi.role is not Role.CONVERGENCE:
        raise ValueError(f"expected a rate of convergence, got {phi.role}")
    return Modulus(lambda k: phi(2 * k + 1), Role.CAUCHY,
                   f"cauchy<{phi.description}>")


def _require_divergence(theta: Modulus) -> None:
    if theta.role is not Role.DIVERGENCE:
        raise ValueError(f"expected a rate of divergence, got {theta.role}")


def divergence_tail_shift(theta: Modulus, drop: int, *,
                          head_ceiling: Optional[int] = None,
                          unit_bounded: bool = False) -> Modulus:
    """Divergence witness for the series with its first ``drop`` terms removed.

    ``head_ceiling`` must be an integer upper bound on the ceiling of the sum
    of the dropped terms; for series with terms in [0,1] pass
    ``unit_bounded=True`` instead and the monotone envelope of theta is used
    with ``drop`` standing in for the head sum.
    """
    _require_divergence(theta)
    if drop < 1:
        raise ValueError(f"drop must be >= 1, got {drop}")
    if unit_bounded:
        theta_envelope = g_plus(theta)
        fn = lambda n: monus(theta_envelope(n + drop), drop)
    else:
        if head_ceiling is None or head_ceiling < 0:
            raise ValueError("head_ceiling (>= 0) required when terms are not unit bounded")
        fn = lambda n: monus(theta(n + head_ceiling), drop)
    return Modulus(fn, Role.DIVERGENCE, f"tail_shift[{drop}]<{theta.description}>")


def divergence_scale(theta: Modulus, c: Rational) -> Modulus:
    """Divergence witness for the series scaled by c > 0: n |-> theta(ceil(n/c))."""
    _require_divergence(theta)
    c = Fraction(c)
    if c <= 0:
        raise ValueError(f"scale factor must be positive, got {c}")
    return Modulus(lambda n: theta(ceil_frac(Fraction(n) / c)), Role.DIVERGENCE,
                   f"scale[{c}]<{theta.description}>")


def divergence_sum(theta: Modulus, gamma: Modulus) -> Modulus:
    """Divergence witness for a termwise sum of two series: pointwise min."""
    _require_divergence(theta)
    _require_divergence(gamma)
    return Modulus(lambda n: min(theta(n), gamma(n)), Role.DIVERGENCE,
                   f"sum<{theta.description},{gamma.description}>")


def combine_linear(phi1: Modulus, phi2: Modulus, q: Rational, r: Rational) -> Modulus:
    """Witness for q*a_n + r*b_n from witnesses for (a_n) and (b_n).

    Both inputs must share a role among convergence / Cauchy; the output
    keeps that role.
    """
    q = Fraction(q)
    r = Fraction(r)
    if q <= 0 or r <= 0:
        raise ValueError(f"coefficients must be positive, got q={q}, r={r}")
    if phi1.role is not phi2.role:
        raise ValueError(f"role mismatch: {phi1.role} vs {phi2.role}")
    if phi1.role not in (Role.CAUCHY, Role.CONVERGENCE):
        raise ValueError(f"unsupported role for linear combination: {phi1.role}")

    def fn(k: int) -> int:
        i = ceil_frac(2 * q * (k + 1)) - 1
        j = ceil_frac(2 * r * (k + 1)) - 1
        return max(phi1(i), phi2(j))

    return Modulus(fn, phi1.role, f"linear[{q},{r}]<{phi1.description},{phi2.description}>")


def xu_rate(theta: Modulus, L: int, *,
            psi: Optional[Modulus] = None,
            chi: Optional[Modulus] = None) -> Modulus:
    """Rate of convergence to 0 for sequences obeying the damped recurrences
    s_{n+1} <= (1 - a_n) s_n + a_n b_n   (pass ``psi``, a rate for b_n -> 0)
    s_{n+1} <= (1 - a_n) s_n + c_n       (pass ``chi``, a Cauchy modulus of sum c_n)

    with L >= 1 an upper bound on (s_n) and theta a rate of divergence of
    sum a_n, (a_n) in [0,1].
    """
    _require_divergence(theta)
    if L < 1:
        raise ValueError(f"upper bound L must be >= 1, got {L}")
    if (psi is None) == (chi is None):
        raise ValueError("pass exactly one of psi (first form) or chi (second form)")
    if psi is not None:
        fn = lambda k: theta(psi(2 * k + 1) + ceil_ln(2 * L * (k + 1))) + 1
        tag = f"xu1<{theta.description};{psi.description}>"
    else:
        if chi.role is not Role.CAUCHY:
            raise ValueError(f"chi must be a Cauchy modulus, got {chi.role}")
        fn = lambda k: theta(chi(2 * k + 1) + 1 + ceil_ln(2 * L * (k + 1))) + 1
        tag = f"xu2<{theta.description};{chi.description}>"
    return Modulus(fn, Role.CONVERGENCE, tag)


def sabach_shtern_bound(L: Rational, J: int, N: int, gamma: Rational) -> Callable[[int], Fraction]:
    """Closed-form envelope n |-> J*L / (gamma*(n+J)) for recurrences
    s_{n+1} <= (1 - gamma*a_{n+1}) s_n + (a_n - a_{n+1}) c_n with
    a_n = N/(gamma*(n+J)), c_n <= L and s_0 <= L."""
    L = Fraction(L)
    gamma = Fraction(gamma)
    if not (J >= N >= 2):
        raise ValueError(f"need J >= N >= 2, got J={J}, N={N}")
    if not (0 < gamma <= 1):
        raise ValueError(f"gamma must lie in (0,1], got {gamma}")
    if L <= 0:
        raise ValueError(f"L must be positive, got {L}")
    return lambda n: J * L / (gamma * (n + J))


# --------------------------------------------------------------------------
# metastability calculus


def meta_from_cauchy(phi: Modulus) -> MetaRate:
    """A Cauchy modulus is already a metastability witness, ignoring g."""
    if phi.role is not Role.CAUCHY:
        raise ValueError(f"expected a Cauchy modulus, got {phi.role}")
    return MetaRate(lambda k, g: phi(k), f"meta<{phi.description}>")


def meta_plus(omega: MetaRate) -> Callable[[int, IntFn, int], int]:
    """(k, g, n) |-> n + omega(k, g_n); the witness localized past index n."""

    def plus(k: int, g: IntFn, n: int) -> int:
        return n + omega(k, g_shift(g, n))

    return plus


def meta_dagger(omega: MetaRate) -> Callable[[int, IntFn, int], int]:
    """Monotone-in-n envelope of meta_plus, by scanning i in [0;n]."""
    plus = meta_plus(omega)

    def dagger(k: int, g: IntFn, n: int) -> int:
        best = 0
        for i in range(n + 1):
            _tick()
            v = plus(k, g, i)
            if v > best:
                best = v
        return best

    return dagger


def meta_to_eps(omega: MetaRate) -> Callable[[Fraction, IntFn], int]:
    """Index-form witness to epsilon-form: (eps, g) |-> omega(ceil(1/eps)-1, g)."""

    def eps_form(eps: Rational, g: IntFn) -> int:
        eps = Fraction(eps)
        if eps <= 0:
            raise ValueError(f"eps must be positive, got {eps}")
        return omega(ceil_frac(1 / eps) - 1, g)

    return eps_form


def meta_from_eps(omega_eps: Callable[[Fraction, IntFn], int]) -> MetaRate:
    """Epsilon-form witness (with [N; g(N)] windows) back to index form."""

    def fn(k: int, g: IntFn) -> int:
        return omega_eps(Fraction(1, k + 1), g_tilde(g))

    return MetaRate(fn, "from_eps")


def transfer_counter(phi_at: int, g: IntFn) -> IntFn:
    """The counter function h used when transferring metastability across a
    vanishing-gap companion sequence: h(m) = M - m + g(M), M = max(phi_at, m)."""

    def h(m: int) -> int:
        cap = max(phi_at, m)
        return cap - m + g(cap)

    return h


def meta_transfer(omega: MetaRate, phi: Modulus) -> MetaRate:
    """Metastability for (y_n) given a witness for (x_n) and a rate phi for
    d(x_n, y_n) -> 0: (k,g) |-> max(phi(3k+2), omega(3k+2, h_{k,g}))."""
    if phi.role is not Role.CONVERGENCE:
        raise ValueError(f"expected a rate of convergence, got {phi.role}")

    def fn(k: int, g: IntFn) -> int:
        anchor = phi(3 * k + 2)
        return max(anchor, omega(3 * k + 2, transfer_counter(anchor, g)))

    return MetaRate(fn, f"transfer<{omega.description};{phi.description}>")


def lmeta_from_asreg(phi: Modulus, L: int) -> Modulus:
    """Fixed-window metastability from an asymptotic-regularity rate:
    k |-> phi(L(k+1) - 1) certifies windows of length L."""
    if phi.role is not Role.ASYMPTOTIC_REGULARITY:
        raise ValueError(f"expected a rate of asymptotic regularity, got {phi.role}")
    if L < 1:
        raise ValueError(f"window length must be >= 1, got {L}")
    return Modulus(lambda k: phi(L * (k + 1) - 1), Role.CAUCHY,
                   f"lmeta[{L}]<{phi.description}>")
