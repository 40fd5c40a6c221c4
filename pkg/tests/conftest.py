from __future__ import annotations

import math

import numpy as np
import pytest

from aliquot_omega.arith import sieve_spf

# (criterion, passed, detail) lines collected by the acceptance module
ACCEPTANCE_REPORT: list[tuple[int, bool, str]] = []


@pytest.fixture(scope="session")
def spf_1e6():
    return sieve_spf(10**6)


@pytest.fixture(scope="session")
def eratosthenes_1e7():
    """Boolean primality table for 0..10**7 from a plain Eratosthenes sieve."""
    limit = 10**7
    is_p = np.ones(limit + 1, dtype=bool)
    is_p[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if is_p[p]:
            is_p[p * p :: p] = False
    return is_p


def brute_sigma(n: int) -> int:
    total = 0
    d = 1
    while d * d <= n:
        if n % d == 0:
            total += d
            if d * d != n:
                total += n // d
        d += 1
    return total


def brute_factor(n: int) -> list[tuple[int, int]]:
    out = []
    p = 2
    while p * p <= n:
        if n % p == 0:
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            out.append((p, e))
        p += 1
    if n > 1:
        out.append((n, 1))
    return out


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_REPORT:
        return
    terminalreporter.section("acceptance criteria")
    for crit, ok, detail in sorted(ACCEPTANCE_REPORT):
        terminalreporter.write_line(f"criterion {crit:>2}: {'PASS' if ok else 'FAIL'}  {detail}")


def trial_division_table(limit: int, width: int = 8):
    """Padded (primes, exps, counts) for 1..limit by vectorized trial division.

    Every prime up to sqrt(limit) is divided out of the whole range at once;
    whatever cofactor survives is a prime larger than sqrt(limit).
    """
    n = limit
    cof = np.arange(1, n + 1, dtype=np.int64)
    primes = np.zeros((n, width), dtype=np.int64)
    exps = np.zeros((n, width), dtype=np.int64)
    counts = np.zeros(n, dtype=np.int64)
    rows = np.arange(n)
    for p in range(2, math.isqrt(limit) + 1):
        if any(p % q == 0 for q in range(2, math.isqrt(p) + 1)):
            continue
        e = np.zeros(n, dtype=np.int64)
        hit = rows[p - 1 :: p]
        while hit.size:
            cof[hit] //= p
            e[hit] += 1
            hit = hit[cof[hit] % p == 0]
        idx = np.flatnonzero(e)
        primes[idx, counts[idx]] = p
        exps[idx, counts[idx]] = e[idx]
        counts[idx] += 1
    idx = np.flatnonzero(cof > 1)
    primes[idx, counts[idx]] = cof[idx]
    exps[idx, counts[idx]] = 1
    counts[idx] += 1
    return primes, exps, counts
