"""Certificate verification against measured residuals.

A certificate is only as good as the data it survives: these routines take
recorded traces or exact synthetic sequences and check the defining property
of each witness kind, producing replayable verdicts.  Exact-rational inputs
are checked with zero tolerance; floating inputs carry an explicit slack.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .moduli import BudgetExceeded, budgeted

__all__ = [
    "Status",
    "Verdict",
    "verify_conv_rate",
    "verify_cauchy_modulus",
    "verify_divergence_rate",
    "verify_metastability",
    "window_diameter",
    "STANDARD_COUNTERS",
]

IntFn = Callable[[int], int]
Number = Union[float, Fraction]


class Status(Enum):
    PASS = "pass"
    FAIL = "fail"
    PARTIAL = "partial"


@dataclass
class Verdict:
    check_id: str
    status: Status
    slack: Number
    detail: str = ""
    violation: Optional[Dict[str, object]] = None  # replayable: k, n, measured, bound
    certified: List[Dict[str, object]] = field(default_factory=list)
    coverage: Optional[int] = None  # largest fully verified k
    info: Dict[str, object] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status is Status.PASS


def _is_exact(values: Sequence) -> bool:
    return len(values) > 0 and isinstance(values[0], (Fraction, int)) \
        and not isinstance(values, np.ndarray)


def _suffix_max(values: Sequence[Number]) -> List[Number]:
    out: List[Number] = [values[-1]] * len(values)
    for i in range(len(values) - 2, -1, -1):
        out[i] = values[i] if values[i] > out[i + 1] else out[i + 1]
    return out


def verify_conv_rate(values: Sequence[Number], rate: IntFn, k_max: int,
                     slack: Number = 0, check_id: str = "conv") -> Verdict:
    """Pass iff value_n <= 1/(k+1) + slack for every recorded n >= rate(k),
    for all k <= k_max.  Ks whose threshold exceeds the record give Partial."""
    n = len(values)
    if n == 0:
        raise ValueError("empty value sequence")
    exact = _is_exact(values)
    suffix = _suffix_max(list(values))
    coverage = -1
    partial_ks: List[int] = []
    for k in range(k_max + 1):
        bound = rate(k)
        if bound >= n:
            partial_ks.append(k)
            continue
        limit = Fraction(1, k + 1) + slack if exact else 1.0 / (k + 1) + float(slack)
        if suffix[bound] > limit:
            offender = next(i for i in range(bound, n) if values[i] > limit)
            return Verdict(check_id, Status.FAIL, slack,
                           detail=f"residual exceeds certificate at k={k}",
                           violation={"k": k, "n": offender,
                                      "measured": values[offender], "bound": bound},
                           coverage=coverage)
        if not partial_ks:
            coverage = k
    if partial_ks:
        return Verdict(check_id, Status.PARTIAL, slack,
                       detail=f"trace of length {n} does not reach the threshold "
                              f"for k in {partial_ks[:5]}{'...' if len(partial_ks) > 5 else ''}",
                       coverage=coverage, info={"partial_ks": partial_ks})
    return Verdict(check_id, Status.PASS, slack, coverage=coverage)


def verify_cauchy_modulus(values: Sequence, modulus: IntFn, k_max: int,
                          p_max: Optional[int] = None, slack: Number = 0,
                          dist: Optional[Callable] = None,
                          check_id: str = "cauchy") -> Verdict:
    """Pass iff d(x_{n+p}, x_n) <= 1/(k+1) + slack for all k <= k_max,
    n >= modulus(k) and p (up to p_max, within the record)."""
    n_len = len(values)
    if n_len == 0:
        raise ValueError("empty sequence")
    if dist is None:
        exact = _is_exact(values)
        gap = lambda i, j: abs(values[j] - values[i])
    else:
        exact = False
        gap = lambda i, j: dist(values[i], values[j])
    horizon = n_len - 1 if p_max is None else p_max

    # D[n] = max over recorded p <= horizon of d(x_{n+p}, x_n)
    D: List[Number] = []
    for i in range(n_len):
        top = 0 if exact else 0.0
        for j in range(i + 1, min(i + horizon, n_len - 1) + 1):
            g = gap(i, j)
            if g > top:
                top = g
        D.append(top)
    suffix = _suffix_max(D)

    coverage = -1
    partial_ks: List[int] = []
    for k in range(k_max + 1):
        bound = modulus(k)
        if bound >= n_len:
            partial_ks.append(k)
            continue
        limit = Fraction(1, k + 1) + slack if exact else 1.0 / (k + 1) + float(slack)
        if suffix[bound] > limit:
            offender = next(i for i in range(bound, n_len) if D[i] > limit)
            return Verdict(check_id, Status.FAIL, slack,
                           detail=f"pair gap exceeds certificate at k={k}",
                           violation={"k": k, "n": offender,
                                      "measured": D[offender], "bound": bound},
                           coverage=coverage)
        if not partial_ks:
            coverage = k
    if partial_ks:
        return Verdict(check_id, Status.PARTIAL, slack,
                       detail=f"record of length {n_len} does not reach the modulus "
                              f"for k in {partial_ks[:5]}{'...' if len(partial_ks) > 5 else ''}",
                       coverage=coverage, info={"partial_ks": partial_ks})
    return Verdict(check_id, Status.PASS, slack, coverage=coverage)


def verify_divergence_rate(terms: Sequence[Number], rate: IntFn, n_max: int,
                           slack: Number = 0, check_id: str = "divergence") -> Verdict:
    """Pass iff sum(terms[0..rate(n)]) >= n for all n <= n_max."""
    if len(terms) == 0:
        raise ValueError("empty term sequence")
    if any(t < 0 for t in terms):
        raise ValueError("terms must be nonnegative")
    exact = _is_exact(terms)
    prefix: List[Number] = [terms[0]]
    for t in terms[1:]:
        prefix.append(prefix[-1] + t)
    coverage = -1
    partial_ns: List[int] = []
    for n in range(n_max + 1):
        idx = rate(n)
        if idx >= len(terms):
            partial_ns.append(n)
            continue
        total = prefix[idx]
        target = n - (0 if exact else float(slack))
        if total < target:
            return Verdict(check_id, Status.FAIL, slack,
                           detail=f"prefix sum short of target at n={n}",
                           violation={"k": n, "n": idx, "measured": total, "bound": idx},
                           coverage=coverage)
        if not partial_ns:
            coverage = n
    if partial_ns:
        return Verdict(check_id, Status.PARTIAL, slack,
                       detail=f"term record of length {len(terms)} does not reach the "
                              f"witness index for n in {partial_ns[:5]}"
                              f"{'...' if len(partial_ns) > 5 else ''}",
                       coverage=coverage, info={"partial_ns": partial_ns})
    return Verdict(check_id, Status.PASS, slack, coverage=coverage)


# --------------------------------------------------------------------------
# metastability


def window_diameter(points: Sequence, lo: int, hi: int,
                    dist: Optional[Callable] = None,
                    stop_above: Optional[float] = None) -> Number:
    """Max pairwise distance among points[lo..hi], with early exit."""
    if dist is None:
        window = points[lo:hi + 1]
        return max(window) - min(window)
    worst = 0.0
    for i in range(lo, hi + 1):
        for j in range(i + 1, hi + 1):
            d = dist(points[i], points[j])
            if d > worst:
                worst = d
                if stop_above is not None and worst > stop_above:
                    return worst
    return worst


STANDARD_COUNTERS: Dict[str, Callable[[int], int]] = {
    "const:1": lambda n: 1,
    "const:5": lambda n: 5,
    "identity": lambda n: n,
    "affine:2:5": lambda n: 2 * n + 5,
}


def parse_counter(spec: str) -> Callable[[int], int]:
    """Counter functions named in configs: const:<c>, identity, affine:<a>:<b>."""
    if spec in STANDARD_COUNTERS:
        return STANDARD_COUNTERS[spec]
    parts = spec.split(":")
    if parts[0] == "const" and len(parts) == 2:
        c = int(parts[1])
        return lambda n: c
    if parts[0] == "affine" and len(parts) == 3:
        a, b = int(parts[1]), int(parts[2])
        return lambda n: a * n + b
    raise ValueError(f"unknown counter function {spec!r}")


def verify_metastability(points: Sequence, omega: Callable[[int, IntFn], int],
                         k_list: Sequence[int],
                         counters: Dict[str, IntFn],
                         slack: Number = 0,
                         dist: Optional[Callable] = None,
                         ceiling: Optional[int] = None,
                         max_ops: Optional[int] = 10**7,
                         check_id: str = "metastability") -> Verdict:
    """For each (k, g): find N <= omega(k, g) with all pairwise distances in
    [N; N+g(N)] below 1/(k+1) + slack.

    The search over N is linear and exhaustive up to the bound (or the end of
    the record); a certified N is recorded per pair.  A bound whose
    evaluation crosses the budget yields Partial, carrying the recursion
    depth reached.
    """
    n_len = len(points)
    if n_len == 0:
        raise ValueError("empty point sequence")
    certified: List[Dict[str, object]] = []
    partials: List[Dict[str, object]] = []
    for k in k_list:
        limit = 1.0 / (k + 1) + float(slack)
        for g_name, g in counters.items():
            outcome = budgeted(omega, k, g, ceiling=ceiling, max_ops=max_ops)
            if isinstance(outcome, BudgetExceeded):
                partials.append({"k": k, "g": g_name, "reason": outcome.reason,
                                 "depth": outcome.depth, "ops": outcome.ops})
                continue
            bound = outcome
            found = None
            search_top = min(bound, n_len - 1)
            truncated = bound > n_len - 1
            for N in range(search_top + 1):
                w = g(N)
                if N + w > n_len - 1:
                    truncated = True
                    continue
                diam = window_diameter(points, N, N + w, dist=dist, stop_above=limit)
                if diam <= limit:
                    found = (N, w, diam)
                    break
            if found is not None:
                certified.append({"k": k, "g": g_name, "N": found[0],
                                  "window": found[1], "diameter": found[2],
                                  "bound": bound})
            elif truncated:
                partials.append({"k": k, "g": g_name,
                                 "reason": f"record of length {n_len} cannot cover "
                                           f"windows up to bound {bound}"})
            else:
                return Verdict(check_id, Status.FAIL, slack,
                               detail=f"no admissible window start below the bound "
                                      f"for k={k}, g={g_name}",
                               violation={"k": k, "g": g_name, "bound": bound},
                               certified=certified)
    if partials:
        return Verdict(check_id, Status.PARTIAL, slack,
                       detail=f"{len(partials)} (k,g) pairs not fully verifiable",
                       certified=certified, info={"partials": partials})
    return Verdict(check_id, Status.PASS, slack, certified=certified)
