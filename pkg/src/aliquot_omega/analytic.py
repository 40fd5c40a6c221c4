"""Exact counts behind the asymptotic estimates: smooth numbers Psi(x, y),
primes in residue classes, prime-reciprocal windows, and the number of
n <= x with q | s(n)."""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable

import numpy as np
from numba import njit

from .arith import iterated_log, primes_up_to, sieve_spf
from .errors import IntegrityError
from .exceptional import Thresholds
from .factor64 import factor_u64

DIRECT_PSI_LIMIT = 10**7
VARIANTS = ("reciprocal-p", "reciprocal-p-minus-1")


@lru_cache(maxsize=4)
def _primes(limit: int) -> np.ndarray:
    return primes_up_to(limit)


def euler_phi(q: int) -> int:
    out = q
    for p, _ in factor_u64(q).factors:
        out = out // p * (p - 1)
    return out


def divisor_count(q: int) -> int:
    return math.prod(e + 1 for _, e in factor_u64(q).factors)


# ---------------------------------------------------------------------------
# smooth numbers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SmoothQuery:
    x: float
    y: float
    psi: int
    u: float
    de_bruijn_ref: float  # x / u**u, nan unless u > 1


@njit(cache=True)
def _count_smooth(limit, y, spf):
    count = 0
    for n in range(1, limit + 1):
        v = n
        big = 1
        while v > 1:
            big = spf[v]
            v //= big
        if big <= y:
            count += 1
    return count


def _psi_direct(limit: int, y: float) -> int:
    if limit < 2:
        return limit
    spf = sieve_spf(limit).spf
    return int(_count_smooth(limit, float(y), spf))


def _psi_buchstab(limit: int, y: float) -> int:
    """Psi via Psi(N, y) = 1 + sum_{p <= y} Psi(N/p, p), memoized on (N, k)
    where k indexes the admissible primes."""
    primes = _primes(int(min(y, limit)))
    plist = primes.tolist()

    @lru_cache(maxsize=None)
    def psi(N: int, k: int) -> int:
        if N == 0:
            return 0
        if k == 0:
            return 1
        if plist[k - 1] >= N:
            return N
        if k == 1:
            return N.bit_length()
        total = 1
        # primes with p*p <= N recurse; the rest have N//p < p, so Psi(N/p, p) = N//p
        j = 0
        while j < k and plist[j] * plist[j] <= N:
            total += psi(N // plist[j], j + 1)
            j += 1
        if j < k:
            hi = int(np.searchsorted(primes, N, side="right"))
            hi = min(hi, k)
            if hi > j:
                total += int((N // primes[j:hi]).sum())
        return total

    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, 10_000))
    try:
        return psi(limit, len(plist))
    finally:
        sys.setrecursionlimit(old)


def psi_smooth(x: float, y: float, method: str = "auto") -> SmoothQuery:
    """Exact count of y-smooth n <= x (n = 1 counts).

    ``method`` is ``"direct"`` (spf sieve), ``"buchstab"`` (memoized
    recursion) or ``"auto"``, which sieves up to 10**7 and recurses above.
    """
    if x < 1 or y < 1:
        raise ValueError("psi_smooth needs x >= 1 and y >= 1")
    limit = math.floor(x)
    if y >= limit:
        psi = limit
    elif y < 2:
        psi = 1
    elif method == "direct" or (method == "auto" and limit <= DIRECT_PSI_LIMIT):
        psi = _psi_direct(limit, y)
    elif method in ("buchstab", "auto"):
        psi = _psi_buchstab(limit, y)
    else:
        raise ValueError(f"unknown method {method!r}")
    if y > 1:
        u = math.log(x) / math.log(y)
    else:
        u = math.inf
    ref = x / u**u if 1 < u < math.inf else math.nan
    return SmoothQuery(x, y, psi, u, ref)


# ---------------------------------------------------------------------------
# primes in progressions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class APCount:
    X: int
    q: int
    counts: dict[int, int]
    pi_X: int
    discrepancy: float


def primes_in_ap(X: int, q: int) -> APCount:
    """pi(X; q, a) for every residue a coprime to q, and the worst relative
    deviation max_a |phi(q) pi(X; q, a) / pi(X) - 1|."""
    if X < 2 or q < 1:
        raise ValueError("primes_in_ap needs X >= 2 and q >= 1")
    primes = _primes(int(X))
    residues = np.bincount(primes % q, minlength=q)
    counts = {a: int(residues[a]) for a in range(q) if math.gcd(a, q) == 1}
    pi_x = int(primes.shape[0])
    phi = len(counts)
    disc = max(abs(phi * c / pi_x - 1.0) for c in counts.values())
    return APCount(int(X), int(q), counts, pi_x, disc)


# ---------------------------------------------------------------------------
# prime reciprocal windows
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MertensWindow:
    y: float
    z: float
    variant: str
    value: float
    reference: float  # log2 z - log2 y, clamped iterated logs


def mertens_window(y: float, z: float, variant: str = "reciprocal-p") -> MertensWindow:
    """Sum over primes y < p <= z of 1/p or 1/(p - 1)."""
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    if z < y:
        raise ValueError("mertens_window needs z >= y")
    primes = _primes(int(math.floor(z)))
    primes = primes[primes > y]
    shift = 0 if variant == "reciprocal-p" else 1
    value = math.fsum(1.0 / (p - shift) for p in primes.tolist())
    y_eff = max(float(y), 1e-300)
    reference = iterated_log(z, 2) - iterated_log(y_eff, 2)
    return MertensWindow(y, z, variant, value, reference)


# ---------------------------------------------------------------------------
# q | s(n)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QDivisibilityReport:
    x: int
    q: int
    count: int
    count_restricted: int  # n outside E_A(x) and E_B(x)
    tau_q: int
    phi_q: int
    reference: float
    threshold_mode: str

    @property
    def implied_constant(self) -> float:
        return self.count / self.reference

    @property
    def implied_constant_restricted(self) -> float:
        return self.count_restricted / self.reference


def _qdiv_report(x: int, q: int, count: int, restricted: int, mode: str) -> QDivisibilityReport:
    tau, phi = divisor_count(q), euler_phi(q)
    ref = tau / phi * x * iterated_log(x, 3)
    return QDivisibilityReport(x, q, count, restricted, tau, phi, ref, mode)


def q_divides_s_count(x: int, q: int, records: Iterable,
                      threshold_mode: str = "unknown") -> QDivisibilityReport:
    """Count n <= x with q | s(n) from a complete record stream for n = 1..x.

    n = 1 is never counted: s(1) = 0 is divisible by everything.  The
    restricted count keeps only n for which conditions A and B both hold.
    """
    if q < 2:
        raise ValueError("q must be >= 2")
    expected = 1
    count = restricted = 0
    for r in records:
        if r.n != expected or r.x != x:
            raise IntegrityError(f"record stream out of order at n={r.n} (expected {expected})")
        expected += 1
        if r.s_n > 0 and r.s_n % q == 0:
            count += 1
            if r.flags["A"] and r.flags["B"]:
                restricted += 1
    if expected != x + 1:
        raise IntegrityError(f"record stream ended at n={expected - 1}, expected {x}")
    return _qdiv_report(x, q, count, restricted, threshold_mode)


def q_divides_s_survey(x: int, q: int, thresholds: Thresholds,
                       segment_size: int = 1 << 22) -> QDivisibilityReport:
    """Same count as q_divides_s_count, computed segment by segment."""
    from .records import segment_records

    if q < 2:
        raise ValueError("q must be >= 2")
    th = thresholds.at(x)
    spf = sieve_spf(max(x, 2))
    count = restricted = 0
    lo = 1
    while lo <= x:
        hi = min(x + 1, lo + segment_size)
        seg = segment_records(lo, hi, spf, [th])
        s = seg.s
        hit = (s > 0) & (s % q == 0)
        ab = (seg.holds[0] & 3) == 3
        count += int(np.count_nonzero(hit))
        restricted += int(np.count_nonzero(hit & ab))
        lo = hi
    return _qdiv_report(x, q, count, restricted, th.mode)
