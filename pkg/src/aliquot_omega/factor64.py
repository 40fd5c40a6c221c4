"""Deterministic primality testing and factorization of 64-bit integers.

Values above 2**32 are handled with Montgomery multiplication built from
32-bit limbs, since numba has no 128-bit integer type.  Everything here is
deterministic: Miller-Rabin uses witness sets proven correct for the whole
64-bit range, and the rho stage walks a fixed parameter schedule.

Rho schedule: Brent's cycle detection on ``y -> y*y + c`` starting at
``y0 = 2``, gcds batched over ``RHO_BATCH`` steps.  On failure (gcd == n)
the constant is advanced ``c = 1, 2, 3, ...`` up to ``RHO_MAX_ATTEMPTS``;
after that the cofactor is split by plain odd trial division, which always
terminates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

U64_MAX = (1 << 64) - 1
TRIAL_BOUND = 10_000
RHO_BATCH = 128
RHO_MAX_ATTEMPTS = 64
MAX_FACTORS = 64

_U = np.uint64
_ZERO = _U(0)
_ONE = _U(1)
_TWO = _U(2)
_M32 = _U(0xFFFFFFFF)
_S32 = _U(32)
_LIMIT32 = _U(1 << 32)

# deterministic below 4,759,123,141
_BASES32 = np.array([2, 7, 61], dtype=np.uint64)
# Sinclair's set, deterministic below 2**64
_BASES64 = np.array([2, 325, 9375, 28178, 450775, 9780504, 1795265022], dtype=np.uint64)


def _small_primes(bound: int) -> np.ndarray:
    sieve = np.ones(bound + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, int(bound**0.5) + 1):
        if sieve[p]:
            sieve[p * p :: p] = False
    return np.flatnonzero(sieve).astype(np.uint64)


SMALL_PRIMES = _small_primes(TRIAL_BOUND)


# ---------------------------------------------------------------------------
# Montgomery arithmetic on uint64
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def _mulhi(a, b):
    a0 = a & _M32
    a1 = a >> _S32
    b0 = b & _M32
    b1 = b >> _S32
    p00 = a0 * b0
    p01 = a0 * b1
    p10 = a1 * b0
    p11 = a1 * b1
    mid = (p00 >> _S32) + (p01 & _M32) + (p10 & _M32)
    return p11 + (p01 >> _S32) + (p10 >> _S32) + (mid >> _S32)


@njit(cache=True, nogil=True)
def _mont_setup(n):
    """Return (n^-1 mod 2^64, R mod n, R^2 mod n) for odd n."""
    inv = n
    for _ in range(5):
        inv = inv * (_TWO - n * inv)
    r1 = (_ZERO - n) % n
    r2 = r1
    for _ in range(64):
        r2 = _addmod(r2, r2, n)
    return inv, r1, r2


@njit(cache=True, nogil=True)
def _addmod(a, b, n):
    s = a + b
    if s < a or s >= n:
        s = s - n
    return s


@njit(cache=True, nogil=True)
def _mont_mul(a, b, n, ninv):
    # requires a, b < n so that the high word is below n
    hi = _mulhi(a, b)
    lo = a * b
    u = lo * ninv
    mh = _mulhi(u, n)
    if hi < mh:
        return hi - mh + n
    return hi - mh


@njit(cache=True, nogil=True)
def _mont_pow(base, e, one, n, ninv):
    result = one
    while e > _ZERO:
        if e & _ONE:
            result = _mont_mul(result, base, n, ninv)
        base = _mont_mul(base, base, n, ninv)
        e = e >> _ONE
    return result


@njit(cache=True, nogil=True)
def _gcd(a, b):
    while b != _ZERO:
        a, b = b, a % b
    return a


# ---------------------------------------------------------------------------
# Miller-Rabin
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def _powmod32(a, e, n):
    r = _ONE
    a = a % n
    while e > _ZERO:
        if e & _ONE:
            r = (r * a) % n
        a = (a * a) % n
        e = e >> _ONE
    return r


@njit(cache=True, nogil=True)
def _mr32(n):
    d = n - _ONE
    s = 0
    while (d & _ONE) == _ZERO:
        d = d >> _ONE
        s += 1
    for i in range(_BASES32.shape[0]):
        a = _BASES32[i] % n
        if a == _ZERO:
            continue
        x = _powmod32(a, d, n)
        if x == _ONE or x == n - _ONE:
            continue
        composite = True
        for _ in range(s - 1):
            x = (x * x) % n
            if x == n - _ONE:
                composite = False
                break
        if composite:
            return False
    return True


@njit(cache=True, nogil=True)
def _mr64(n):
    ninv, one, r2 = _mont_setup(n)
    minus_one = n - one
    d = n - _ONE
    s = 0
    while (d & _ONE) == _ZERO:
        d = d >> _ONE
        s += 1
    for i in range(_BASES64.shape[0]):
        a = _BASES64[i] % n
        if a == _ZERO:
            continue
        x = _mont_pow(_mont_mul(a, r2, n, ninv), d, one, n, ninv)
        if x == one or x == minus_one:
            continue
        composite = True
        for _ in range(s - 1):
            x = _mont_mul(x, x, n, ninv)
            if x == minus_one:
                composite = False
                break
        if composite:
            return False
    return True


@njit(cache=True, nogil=True)
def _is_prime(n):
    if n < _U(64):
        # bitmask of primes below 64
        return ((_U(0x28208A20A08A28AC) >> n) & _ONE) == _ONE
    for i in range(15):  # primes 2..47
        if n % SMALL_PRIMES[i] == _ZERO:
            return False
    if n < _U(2809):  # 53**2
        return True
    if n < _LIMIT32:
        return _mr32(n)
    return _mr64(n)


@njit(cache=True, nogil=True)
def _is_prime_many(values, out):
    for i in range(values.shape[0]):
        out[i] = _is_prime(values[i])


# ---------------------------------------------------------------------------
# Pollard rho (Brent)
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def _absdiff(a, b):
    if a > b:
        return a - b
    return b - a


@njit(cache=True, nogil=True)
def _rho_brent(n, c0):
    """One rho attempt on odd composite n; returns a divisor (n on failure)."""
    ninv, one, r2 = _mont_setup(n)
    c = _mont_mul(c0 % n, r2, n, ninv)
    y = _mont_mul(_TWO % n, r2, n, ninv)
    x = y
    ys = y
    q = one
    g = _ONE
    r = 1
    while g == _ONE:
        x = y
        for _ in range(r):
            y = _addmod(_mont_mul(y, y, n, ninv), c, n)
        k = 0
        while k < r and g == _ONE:
            ys = y
            steps = min(RHO_BATCH, r - k)
            for _ in range(steps):
                y = _addmod(_mont_mul(y, y, n, ninv), c, n)
                q = _mont_mul(q, _absdiff(x, y), n, ninv)
            g = _gcd(q, n)
            k += RHO_BATCH
        r *= 2
    if g == n:
        # backtrack one step at a time from the last batch start
        while True:
            ys = _addmod(_mont_mul(ys, ys, n, ninv), c, n)
            g = _gcd(_absdiff(x, ys), n)
            if g > _ONE:
                break
    return g


@njit(cache=True, nogil=True)
def _split(n):
    """Nontrivial divisor of an odd composite n."""
    for attempt in range(1, RHO_MAX_ATTEMPTS + 1):
        d = _rho_brent(n, _U(attempt))
        if d != n and d != _ONE:
            return d
    p = _U(3)
    while p * p <= n:
        if n % p == _ZERO:
            return p
        p += _TWO
    return n


@njit(cache=True, nogil=True)
def _factor_into(n, primes_out, exps_out):
    """Write the factorization of n into the output arrays; return its length."""
    count = 0
    if n <= _ONE:
        return 0
    checked = False
    for i in range(SMALL_PRIMES.shape[0]):
        p = SMALL_PRIMES[i]
        if p * p > n:
            break
        if n % p == _ZERO:
            e = 0
            while n % p == _ZERO:
                n = n // p
                e += 1
            primes_out[count] = p
            exps_out[count] = e
            count += 1
            checked = False
        if not checked and p >= _U(97):
            # a prime cofactor would otherwise be trial-divided all the way up
            checked = True
            if n > _ONE and _is_prime(n):
                break
    if n == _ONE:
        return count
    if n < _U(TRIAL_BOUND) * _U(TRIAL_BOUND) or _is_prime(n):
        primes_out[count] = n
        exps_out[count] = 1
        return count + 1
    # composite cofactor with all prime factors above the trial bound
    stack = np.empty(MAX_FACTORS, dtype=np.uint64)
    found = np.empty(MAX_FACTORS, dtype=np.uint64)
    top = 0
    nfound = 0
    stack[top] = n
    top += 1
    while top > 0:
        top -= 1
        c = stack[top]
        if _is_prime(c):
            found[nfound] = c
            nfound += 1
            continue
        d = _split(c)
        stack[top] = d
        stack[top + 1] = c // d
        top += 2
    found_sorted = np.sort(found[:nfound])
    i = 0
    while i < nfound:
        p = found_sorted[i]
        e = 0
        while i < nfound and found_sorted[i] == p:
            e += 1
            i += 1
        primes_out[count] = p
        exps_out[count] = e
        count += 1
    return count


@njit(cache=True, nogil=True)
def _factor_many(values, primes, exps, counts):
    for i in range(values.shape[0]):
        counts[i] = _factor_into(values[i], primes[i], exps[i])


# ---------------------------------------------------------------------------
# Python surface
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Factorization64:
    """A 64-bit value with its prime factorization, sorted by prime."""

    value: int
    factors: tuple[tuple[int, int], ...]

    def __post_init__(self):
        prod = 1
        for p, e in self.factors:
            prod *= p**e
        if prod != self.value:
            raise ValueError(f"factors {self.factors} do not multiply to {self.value}")

    @property
    def omega(self) -> int:
        return len(self.factors)

    @property
    def big_omega(self) -> int:
        return sum(e for _, e in self.factors)

    @property
    def primes(self) -> tuple[int, ...]:
        return tuple(p for p, _ in self.factors)


def _check_u64(n: int) -> int:
    n = int(n)
    if not 0 <= n <= U64_MAX:
        raise ValueError(f"{n} is outside the unsigned 64-bit range")
    return n


def is_prime_u64(n: int) -> bool:
    """Deterministic primality test for 0 <= n < 2**64."""
    return bool(_is_prime(_U(_check_u64(n))))


def factor_u64(n: int) -> Factorization64:
    """Complete prime factorization of 1 <= n < 2**64.

    >>> factor_u64(600851475143).factors
    ((71, 1), (839, 1), (1471, 1), (6857, 1))
    """
    n = _check_u64(n)
    if n < 1:
        raise ValueError("factor_u64 requires n >= 1")
    primes = np.zeros(MAX_FACTORS, dtype=np.uint64)
    exps = np.zeros(MAX_FACTORS, dtype=np.int64)
    k = _factor_into(_U(n), primes, exps)
    factors = tuple((int(primes[i]), int(exps[i])) for i in range(k))
    return Factorization64(n, factors)


def is_prime_array(values) -> np.ndarray:
    """Vectorized is_prime_u64 over an array of nonnegative integers."""
    values = np.ascontiguousarray(values, dtype=np.uint64)
    out = np.empty(values.shape[0], dtype=np.bool_)
    _is_prime_many(values, out)
    return out


def factor_array(values, width: int = 16):
    """Factor many values at once.

    Returns ``(primes, exps, counts)`` where row ``i`` of ``primes``/``exps``
    holds the first ``counts[i]`` (prime, exponent) pairs of ``values[i]``.
    ``width`` must cover the largest omega in the batch (15 for any 64-bit
    value).
    """
    values = np.ascontiguousarray(values, dtype=np.uint64)
    n = values.shape[0]
    primes = np.zeros((n, max(width, 16)), dtype=np.uint64)
    exps = np.zeros((n, max(width, 16)), dtype=np.int64)
    counts = np.zeros(n, dtype=np.int64)
    _factor_many(values, primes, exps, counts)
    return primes, exps, counts
