"""Seeded synthetic sequences with exactly known witnesses.

Each generator returns rational-valued sequences together with a witness
that is provably valid by a closed form, so combinator outputs can be
checked against the defining property with zero tolerance.  All families
are monotone by construction, which lets window diameters collapse to
endpoint gaps; the checkers assert monotonicity on the prefix before using
it.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Tuple

from .moduli import (
    MetaRate,
    Modulus,
    Role,
    cauchy_from_conv,
    ceil_frac,
    combine_linear,
    divergence_scale,
    divergence_sum,
    divergence_tail_shift,
    g_shift,
    lmeta_from_asreg,
    meta_dagger,
    meta_from_cauchy,
    meta_plus,
    meta_transfer,
    monus,
    xu_rate,
)

__all__ = [
    "DivergentSeries",
    "ConvergentSeq",
    "CauchySeries",
    "make_divergent",
    "make_convergent",
    "make_cauchy_series",
    "run_combinator_checks",
    "CheckResult",
]


def exact_threshold_rate(bound: Callable[[int], Fraction], role: Role,
                         description: str) -> Modulus:
    """Least-n witness for a nonincreasing exact bound: the returned modulus
    maps k to the least n with bound(n) <= 1/(k+1), found by doubling."""
    cache: Dict[int, int] = {}

    def fn(k: int) -> int:
        if k in cache:
            return cache[k]
        target = Fraction(1, k + 1)
        hi = 1
        while bound(hi) > target:
            hi *= 2
        lo = 0 if bound(0) <= target else hi // 2
        while lo < hi:
            mid = (lo + hi) // 2
            if bound(mid) <= target:
                hi = mid
            else:
                lo = mid + 1
        cache[k] = hi
        return hi

    return Modulus(fn, role, description)


@dataclass
class DivergentSeries:
    terms: Callable[[int], Fraction]
    rate: Modulus
    unit_bounded: bool
    prefix: List[Fraction]  # running partial sums, extended on demand

    def partial(self, upto: int) -> List[Fraction]:
        while len(self.prefix) <= upto:
            n = len(self.prefix)
            last = self.prefix[-1] if self.prefix else Fraction(0)
            self.prefix.append(last + self.terms(n))
        return self.prefix


@dataclass
class ConvergentSeq:
    value: Callable[[int], Fraction]
    limit: Fraction
    rate: Modulus  # rate of convergence
    increasing: bool


@dataclass
class CauchySeries:
    """A convergent series of nonnegative terms with a Cauchy modulus for
    its partial sums."""

    terms: Callable[[int], Fraction]
    modulus: Modulus
    tail_bound: Callable[[int], Fraction]  # sup_p (S_{n+p} - S_n) <= tail_bound(n)


def make_divergent(rng: random.Random, unit: Optional[bool] = None) -> DivergentSeries:
    """Series with a constant floor c plus an optional summable tail."""
    c = Fraction(rng.randint(1, 4), 4)
    extra = Fraction(rng.randint(0, 2), 4)
    if unit:
        c = Fraction(rng.randint(1, 3), 4)
        extra = Fraction(0) if c + extra / 2 > 1 else extra

    def terms(n: int) -> Fraction:
        return c + extra / ((n + 1) * (n + 2))

    rate = Modulus(lambda n: ceil_frac(Fraction(n) / c), Role.DIVERGENCE,
                   f"synthetic_divergent[c={c}]")
    return DivergentSeries(terms, rate, unit_bounded=(c + extra / 2) <= 1, prefix=[])


def make_convergent(rng: random.Random) -> ConvergentSeq:
    """x + r/(n+s) or x + r*rho^n, either sign, with its exact witness."""
    x = Fraction(rng.randint(-4, 4), rng.randint(1, 3))
    r = Fraction(rng.randint(1, 8), rng.randint(1, 4))
    sign = rng.choice([1, -1])
    if rng.random() < 0.5:
        s = rng.randint(1, 3)

        def value(n: int) -> Fraction:
            return x + sign * r / (n + s)

        rate = Modulus(lambda k: monus(ceil_frac(r * (k + 1)), s), Role.CONVERGENCE,
                       f"synthetic_conv[r={r},s={s}]")
    else:
        rho = Fraction(rng.randint(1, 3), 4)

        def value(n: int) -> Fraction:
            return x + sign * r * rho**n

        rate = exact_threshold_rate(lambda n: r * rho**n, Role.CONVERGENCE,
                                    f"synthetic_conv_geo[r={r},rho={rho}]")
    return ConvergentSeq(value, x, rate, increasing=(sign < 0))


def make_cauchy_series(rng: random.Random) -> CauchySeries:
    """Telescoping or geometric nonnegative series with an exact modulus."""
    r = Fraction(rng.randint(1, 6), rng.randint(1, 3))
    if rng.random() < 0.5:
        s = rng.randint(1, 3)

        def terms(n: int) -> Fraction:
            return r / ((n + s) * (n + s + 1))

        tail = lambda n: r / (n + s + 1)
        modulus = Modulus(lambda k: monus(ceil_frac(r * (k + 1)), s + 1), Role.CAUCHY,
                          f"synthetic_cauchy[r={r},s={s}]")
    else:
        rho = Fraction(rng.randint(1, 3), 4)

        def terms(n: int) -> Fraction:
            return r * rho**n

        tail = lambda n: r * rho ** (n + 1) / (1 - rho)
        modulus = exact_threshold_rate(tail, Role.CAUCHY,
                                       f"synthetic_cauchy_geo[r={r},rho={rho}]")
    return CauchySeries(terms, modulus, tail)


# --------------------------------------------------------------------------
# defining-property checkers (exact, zero tolerance)


@dataclass
class CheckResult:
    name: str
    ok: bool
    note: str = ""


def _assert_monotone(values: List[Fraction]) -> bool:
    up = all(values[i] <= values[i + 1] for i in range(len(values) - 1))
    down = all(values[i] >= values[i + 1] for i in range(len(values) - 1))
    return up or down


def _check_divergence(series_terms, rate: Modulus, n_max: int) -> Tuple[bool, str]:
    prefix = [Fraction(0)]
    for n in range(n_max + 1):
        idx = rate(n)
        while len(prefix) <= idx + 1:
            prefix.append(prefix[-1] + series_terms(len(prefix) - 1))
        if prefix[idx + 1] < n:  # prefix[m+1] = sum of terms 0..m
            return False, f"sum through index {idx} is {prefix[idx + 1]} < {n}"
    return True, ""


def _check_conv_rate(values: List[Fraction], limit: Fraction, rate: Modulus,
                     k_max: int) -> Tuple[bool, str]:
    gaps = [abs(v - limit) for v in values]
    suffix = gaps[:]
    for i in range(len(suffix) - 2, -1, -1):
        suffix[i] = max(suffix[i], suffix[i + 1])
    for k in range(k_max + 1):
        b = rate(k)
        if b < len(values) and suffix[b] > Fraction(1, k + 1):
            return False, f"gap above 1/{k + 1} past threshold {b}"
    return True, ""


def _check_cauchy(values: List[Fraction], modulus: Modulus, k_max: int,
                  p_max: int) -> Tuple[bool, str]:
    # monotone sequences: the widest recorded window gap dominates all pair
    # gaps starting at n, so the check is linear instead of cubic
    if not _assert_monotone(values):
        return False, "family is expected to be monotone"
    end = len(values) - 1
    D = [abs(values[min(n + p_max, end)] - values[n]) for n in range(end + 1)]
    for i in range(end - 1, -1, -1):
        D[i] = max(D[i], D[i + 1])
    for k in range(k_max + 1):
        b = modulus(k)
        if b <= end and D[b] > Fraction(1, k + 1):
            return False, f"pair gap above 1/{k + 1} past threshold {b}"
    return True, ""


def run_combinator_checks(seed: int, k_max: int = 200, n_max: int = 200) -> List[CheckResult]:
    """Exercise every combinator on seeded synthetic inputs and check each
    output against its defining property, exactly."""
    rng = random.Random(seed)
    results: List[CheckResult] = []

    def record(name: str, ok: bool, note: str = "") -> None:
        results.append(CheckResult(name, ok, note))

    # ---- rate of convergence -> Cauchy modulus
    conv = make_convergent(rng)
    values = [conv.value(n) for n in range(n_max * 3 + 2)]
    ok, note = _check_conv_rate(values, conv.limit, conv.rate, k_max)
    record("synthetic_conv_witness", ok, note)
    star = cauchy_from_conv(conv.rate)
    ok, note = _check_cauchy(values, star, k_max, n_max)
    record("cauchy_from_conv", ok, note)

    # ---- divergence transforms
    base = make_divergent(rng)
    drop = rng.randint(1, 5)
    if base.unit_bounded:
        shifted = divergence_tail_shift(base.rate, drop, unit_bounded=True)
    else:
        head = sum(base.terms(i) for i in range(drop))
        shifted = divergence_tail_shift(base.rate, drop, head_ceiling=ceil_frac(head))
    ok, note = _check_divergence(lambda n: base.terms(n + drop), shifted, n_max)
    record("divergence_tail_shift", ok, note)

    c_scale = Fraction(rng.randint(1, 6), rng.randint(1, 3))
    scaled = divergence_scale(base.rate, c_scale)
    ok, note = _check_divergence(lambda n: c_scale * base.terms(n), scaled, n_max)
    record("divergence_scale", ok, note)

    other = make_divergent(rng)
    summed = divergence_sum(base.rate, other.rate)
    ok, note = _check_divergence(lambda n: base.terms(n) + other.terms(n), summed, n_max)
    record("divergence_sum", ok, note)

    # ---- linear combination (convergence flavor)
    conv2 = make_convergent(rng)
    q = Fraction(rng.randint(1, 4), 2)
    r = Fraction(rng.randint(1, 4), 2)
    combo = combine_linear(conv.rate, conv2.rate, q, r)
    combined = [q * conv.value(n) + r * conv2.value(n) for n in range(n_max * 3 + 2)]
    ok, note = _check_conv_rate(combined, q * conv.limit + r * conv2.limit, combo, k_max)
    record("combine_linear_conv", ok, note)

    # ---- linear combination (series Cauchy flavor)
    se1 = make_cauchy_series(rng)
    se2 = make_cauchy_series(rng)
    combo2 = combine_linear(se1.modulus, se2.modulus, q, r)
    horizon = combo2(k_max) + n_max + 2
    sums: List[Fraction] = []
    acc = Fraction(0)
    for n in range(horizon):
        acc += q * se1.terms(n) + r * se2.terms(n)
        sums.append(acc)
    ok, note = _check_cauchy(sums, combo2, k_max, n_max)
    record("combine_linear_series", ok, note)

    # ---- damped recurrences (both forms, built with equality)
    a_const = Fraction(rng.randint(1, 3), 4)
    theta_a = Modulus(lambda n: ceil_frac(Fraction(n) / a_const), Role.DIVERGENCE,
                      "xu_a_witness")
    r_b = Fraction(rng.randint(1, 4), 2)
    b_seq = lambda n: r_b * Fraction(1, 2) ** n
    psi_b = exact_threshold_rate(b_seq, Role.CONVERGENCE, "xu_b_witness")
    s0 = Fraction(rng.randint(0, 3))
    L = max(1, ceil_frac(max(s0, r_b)))
    sigma = xu_rate(theta_a, L, psi=psi_b)
    horizon = sigma(k_max) + 40
    s_vals = [s0]
    for n in range(horizon):
        s_vals.append((1 - a_const) * s_vals[-1] + a_const * b_seq(n))
    ok, note = _check_conv_rate(s_vals, Fraction(0), sigma, k_max)
    record("xu_rate_damped", ok, note)

    se3 = make_cauchy_series(rng)
    s0b = Fraction(rng.randint(0, 2))
    # s_n <= s_0 + sum of all c_i, and the full series sum is c_0 + tail(0)
    Lb = max(1, ceil_frac(s0b + se3.terms(0) + se3.tail_bound(0)))
    sigma2 = xu_rate(theta_a, Lb, chi=se3.modulus)
    horizon = sigma2(k_max) + 40
    s2 = [s0b]
    for n in range(horizon):
        s2.append((1 - a_const) * s2[-1] + se3.terms(n))
    ok, note = _check_conv_rate(s2, Fraction(0), sigma2, k_max)
    record("xu_rate_summable", ok, note)

    # ---- metastability calculus on an exactly known Cauchy sequence
    seq = make_convergent(rng)
    seq_vals = [seq.value(n) for n in range(4 * n_max + 4)]
    chi = cauchy_from_conv(seq.rate)
    omega = meta_from_cauchy(chi)
    counters = {"const1": lambda n: 1, "const5": lambda n: 5, "identity": lambda n: n}
    plus = meta_plus(omega)
    dagger = meta_dagger(omega)
    end = len(seq_vals) - 1
    ok = True
    note = ""
    for g_name, g in counters.items():
        # monotone values: window diameter at N is the endpoint gap; suffix
        # maxima make the all-(k,n) localization check linear
        W = [abs(seq_vals[min(N + g(N), end)] - seq_vals[N]) for N in range(end + 1)]
        W_suffix = W[:]
        for i in range(end - 1, -1, -1):
            W_suffix[i] = max(W_suffix[i], W_suffix[i + 1])
        for k in range(k_max + 1):
            # exhibited start for every n: N0 = max(n, chi(k)), which lies in
            # [n; plus bound]; every such window within the record must close
            target = Fraction(1, k + 1)
            c = chi(k)
            if c <= end and W_suffix[c] > target:
                offender = next(n for n in range(c, end + 1) if W[n] > target)
                ok, note = False, f"window gap at k={k},N={offender},g={g_name}"
                break
        if not ok:
            break
        # localized bounds: value identities and monotonicity on a lattice
        for k in range(0, k_max + 1, 29):
            plus_vals = [plus(k, g, i) for i in range(n_max + 1)]
            running = 0
            for n, pv in enumerate(plus_vals):
                running = max(running, pv)
                if pv < n:
                    ok, note = False, f"localized bound below n at k={k},n={n}"
                    break
            if not ok:
                break
            for n in (0, n_max // 2, n_max):
                if dagger(k, g, n) != max(plus_vals[:n + 1]):
                    ok, note = False, f"envelope mismatch at k={k},n={n}"
                    break
            if not ok:
                break
        if not ok:
            break
    record("meta_shift", ok, note)

    # ---- transfer across a vanishing gap
    drift = make_convergent(rng)
    # companion sequence y_n = x_n + (drift_n - drift_limit); gap rate = drift rate
    gap_rate = drift.rate
    delta = [drift.value(n) - drift.limit for n in range(len(seq_vals))]
    y_vals = [seq_vals[n] + delta[n] for n in range(len(seq_vals))]
    gamma = meta_transfer(omega, gap_rate)
    ok = True
    note = ""
    for g_name, g in counters.items():
        for k in range(k_max + 1):
            bound = gamma(k, g)
            anchor = gap_rate(3 * k + 2)
            N = min(bound, max(anchor, chi(3 * k + 2)))
            w = g(N)
            if N + w >= len(y_vals):
                continue
            # x and the drift are monotone, so the window diameter of their
            # sum is at most the sum of the endpoint gaps
            diam_bound = abs(seq_vals[N + w] - seq_vals[N]) + abs(delta[N + w] - delta[N])
            if diam_bound > Fraction(1, k + 1):
                window = y_vals[N:N + w + 1]
                if max(window) - min(window) > Fraction(1, k + 1):
                    ok, note = False, f"transferred window gap at k={k},g={g_name}"
                    break
        if not ok:
            break
    record("meta_transfer", ok, note)

    # ---- fixed-window metastability from an asymptotic-regularity rate
    # steps of x + sign*r/(n+s) are r/((n+s)(n+s+1)) <= 1/(k+1) from a sqrt threshold
    r_step = Fraction(rng.randint(1, 6), rng.randint(1, 2))
    s_off = rng.randint(1, 3)
    walk = [Fraction(0)]
    for n in range(4 * n_max + 4):
        walk.append(walk[-1] + r_step / ((n + s_off) * (n + s_off + 1)))
    from .moduli import ceil_sqrt

    asreg = Modulus(lambda k: monus(ceil_sqrt(ceil_frac(r_step * (k + 1))), s_off),
                    Role.ASYMPTOTIC_REGULARITY, "synthetic_asreg")
    # witness validity: step_n = r/((n+s)(n+s+1)) <= r/(n+s)^2
    steps = [abs(walk[n + 1] - walk[n]) for n in range(len(walk) - 1)]
    ok, note = _check_conv_rate(steps, Fraction(0), asreg, k_max)
    record("synthetic_asreg_witness", ok, note)
    for L in (1, 2, 5):
        phi_L = lmeta_from_asreg(asreg, L)
        ok, note = True, ""
        for k in range(0, k_max + 1, 13):
            N = phi_L(k)
            if N + L >= len(walk):
                continue
            window = walk[N:N + L + 1]
            if max(window) - min(window) > Fraction(1, k + 1):
                ok, note = False, f"window of length {L} fails at k={k}"
                break
        record(f"lmeta_window_{L}", ok, note)

    return results
