"""Sieve-based arithmetic: sigma, s(n) = sigma(n) - n, smallest prime factors,
factor profiles, and the clamped iterated logarithm."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numba import njit

from .errors import ConfigError

DEFAULT_SEGMENT = 1 << 22
SEGMENT_BUDGET = 1 << 25  # int64 entries per sigma segment (256 MiB)
SPF_BUDGET = 1 << 28  # uint32 entries in an spf table (1 GiB)


@njit(cache=True, nogil=True)
def _isqrt(n):
    r = np.int64(math.sqrt(n))
    while r * r > n:
        r -= 1
    while (r + 1) * (r + 1) <= n:
        r += 1
    return r


@njit(cache=True, nogil=True)
def _sigma_segment(lo, hi, out):
    # every divisor pair (d, k) of m = d*k with d <= k is visited exactly once
    out[:] = 0
    top = _isqrt(hi - 1)
    for d in range(1, top + 1):
        k = max(d, (lo + d - 1) // d)
        m = d * k
        while m < hi:
            if k == d:
                out[m - lo] += d
            else:
                out[m - lo] += d + k
            k += 1
            m += d


@njit(cache=True, nogil=True)
def _spf_linear(limit, spf, primes):
    count = 0
    if limit >= 1:
        spf[1] = 1
    for i in range(2, limit + 1):
        if spf[i] == 0:
            spf[i] = i
            primes[count] = i
            count += 1
        si = spf[i]
        for j in range(count):
            p = primes[j]
            if p > si or i * p > limit:
                break
            spf[i * p] = p
    return count


@njit(cache=True, nogil=True)
def _spf_factor(v, spf, ps, es):
    k = 0
    while v > 1:
        p = np.int64(spf[v])
        e = 0
        while v % p == 0:
            v //= p
            e += 1
        ps[k] = p
        es[k] = e
        k += 1
    return k


@njit(cache=True, nogil=True)
def _spf_factor_many(values, spf, primes, exps, counts):
    for i in range(values.shape[0]):
        counts[i] = _spf_factor(values[i], spf, primes[i], exps[i])


@dataclass(frozen=True)
class SigmaTable:
    lo: int
    hi: int
    values: np.ndarray

    def __post_init__(self):
        if not 1 <= self.lo < self.hi:
            raise ConfigError(f"need 1 <= lo < hi, got [{self.lo}, {self.hi})")
        if len(self.values) != self.hi - self.lo:
            raise ValueError("values length does not match the range")

    def __getitem__(self, n: int) -> int:
        if not self.lo <= n < self.hi:
            raise IndexError(f"{n} outside [{self.lo}, {self.hi})")
        return int(self.values[n - self.lo])

    def __len__(self) -> int:
        return self.hi - self.lo


def sieve_sigma(lo: int, hi: int, budget: int = SEGMENT_BUDGET) -> SigmaTable:
    """sigma(n) for n in [lo, hi) by a segmented divisor-accumulation sieve."""
    lo, hi = int(lo), int(hi)
    if not 1 <= lo < hi:
        raise ConfigError(f"need 1 <= lo < hi, got [{lo}, {hi})")
    if hi - lo > budget:
        raise ConfigError(f"segment of {hi - lo} entries exceeds budget {budget}")
    if hi > 2**62:
        raise ConfigError("sigma sieve is limited to n < 2**62")
    out = np.zeros(hi - lo, dtype=np.int64)
    _sigma_segment(lo, hi, out)
    return SigmaTable(lo, hi, out)


def aliquot_sum(n: int, sigma_n: int) -> int:
    """s(n) = sigma(n) - n."""
    return sigma_n - n


def iterated_log(x: float, k: int) -> float:
    """k-th iterate of log1(x) = max(1, log x); always >= 1.

    >>> iterated_log(0.5, 1)
    1.0
    """
    if not x > 0:
        raise ValueError(f"iterated_log needs x > 0, got {x}")
    if k < 1:
        raise ValueError(f"iterated_log needs k >= 1, got {k}")
    v = float(x)
    for _ in range(k):
        v = max(1.0, math.log(v))
    return v


@dataclass(frozen=True)
class FactorProfile:
    factors: tuple[tuple[int, int], ...]
    omega: int
    big_omega: int
    largest: int
    second_largest: int

    @property
    def value(self) -> int:
        v = 1
        for p, e in self.factors:
            v *= p**e
        return v

    def exponent(self, p: int) -> int:
        for q, e in self.factors:
            if q == p:
                return e
        return 0


def profile(factors: Sequence[tuple[int, int]]) -> FactorProfile:
    """omega, Omega, P and P2 from a sorted list of (prime, exponent) pairs.

    P2 is the second-largest *distinct* prime; P = P2 = 1 for the value 1
    and P2 = 1 when only one distinct prime divides the value.
    """
    fs = tuple((int(p), int(e)) for p, e in factors)
    for i, (p, e) in enumerate(fs):
        if e < 1 or p < 2:
            raise ValueError(f"invalid factor pair {(p, e)}")
        if i and fs[i - 1][0] >= p:
            raise ValueError("primes must be strictly increasing")
    largest = fs[-1][0] if fs else 1
    second = fs[-2][0] if len(fs) >= 2 else 1
    return FactorProfile(fs, len(fs), sum(e for _, e in fs), largest, second)


def sigma_of_factors(factors: Sequence[tuple[int, int]]) -> int:
    total = 1
    for p, e in factors:
        total *= (p ** (e + 1) - 1) // (p - 1)
    return total


@dataclass(frozen=True)
class SpfTable:
    limit: int
    spf: np.ndarray

    def __getitem__(self, n: int) -> int:
        return int(self.spf[n])

    def factor(self, n: int) -> list[tuple[int, int]]:
        if not 1 <= n <= self.limit:
            raise ValueError(f"{n} outside the table range [1, {self.limit}]")
        out: list[tuple[int, int]] = []
        spf = self.spf
        while n > 1:
            p = int(spf[n])
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            out.append((p, e))
        return out

    def profile(self, n: int) -> FactorProfile:
        return profile(self.factor(n))

    def factor_array(self, values, width: int = 16):
        """Batch factorization; same padded layout as factor64.factor_array."""
        values = np.ascontiguousarray(values, dtype=np.int64)
        if values.size and (values.min() < 1 or values.max() > self.limit):
            raise ValueError(f"values must lie in [1, {self.limit}]")
        primes = np.zeros((values.shape[0], width), dtype=np.int64)
        exps = np.zeros((values.shape[0], width), dtype=np.int64)
        counts = np.zeros(values.shape[0], dtype=np.int64)
        _spf_factor_many(values, self.spf, primes, exps, counts)
        return primes, exps, counts


def sieve_spf(limit: int, budget: int = SPF_BUDGET) -> SpfTable:
    """Smallest-prime-factor table for 0..limit (linear sieve); spf[1] = 1."""
    limit = int(limit)
    if limit < 2:
        raise ConfigError(f"spf table needs limit >= 2, got {limit}")
    if limit + 1 > budget:
        raise ConfigError(f"spf table of {limit + 1} entries exceeds budget {budget}")
    spf = np.zeros(limit + 1, dtype=np.uint32)
    # pi(n) < 1.26 n / log n for n > 1
    primes = np.empty(int(1.26 * limit / math.log(limit)) + 16, dtype=np.int64)
    _spf_linear(limit, spf, primes)
    return SpfTable(limit, spf)


def primes_up_to(limit: int) -> np.ndarray:
    """Sorted int64 array of primes <= limit (Eratosthenes on a bool array)."""
    limit = int(limit)
    if limit < 2:
        return np.zeros(0, dtype=np.int64)
    sieve = np.ones(limit + 1, dtype=bool)
    sieve[:2] = False
    sieve[4::2] = False
    for p in range(3, math.isqrt(limit) + 1, 2):
        if sieve[p]:
            sieve[p * p :: 2 * p] = False
    return np.flatnonzero(sieve).astype(np.int64)
