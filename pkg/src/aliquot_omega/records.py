"""Per-n records over a segment [lo, hi).

``segment_records`` is the compiled hot path used by surveys: it factors n
from the spf table, takes sigma(n) from the divisor sieve (cross-checked
against the multiplicative formula), factors s(n) through the spf table when
it fits and through the 64-bit factorizer otherwise, and evaluates conditions
A-F and the truncated omega for every checkpoint x >= n.

``reference_record`` rebuilds one record through the plain-Python API; the
two routes are compared in the tests and in sampled survey cross-checks.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np
from numba import njit

from .arith import SpfTable, _spf_factor, iterated_log, profile, sieve_sigma, sigma_of_factors
from .errors import ConfigError, IntegrityError
from .exceptional import ConditionFlags, Thresholds, classify
from .factor64 import _factor_into, factor_u64

OMEGA_WIDTH = 16  # omega of any 64-bit value is at most 15


@njit(cache=True, nogil=True)
def _prime_power_sigma(p, e):
    total = 1
    pk = 1
    for _ in range(e):
        pk *= p
        total += pk
    return total


@njit(cache=True, nogil=True)
def _gcd(a, b):
    while b != 0:
        a, b = b, a % b
    return a


@njit(cache=True, nogil=True)
def _records_kernel(lo, hi, spf, spf_limit, sigma, cp_x, cp_cut, cp_fbound,
                    cp_snum, cp_sden, cp_wlo, cp_whi,
                    s_out, omega_out, big_omega_out, m_out, sigma_m_out, g_out,
                    omega_prime_out, holds_out):
    ps = np.zeros(32, dtype=np.int64)
    es = np.zeros(32, dtype=np.int64)
    sp = np.zeros(64, dtype=np.int64)
    se = np.zeros(64, dtype=np.int64)
    up = np.zeros(64, dtype=np.uint64)
    ue = np.zeros(64, dtype=np.int64)
    ncp = cp_x.shape[0]
    for i in range(hi - lo):
        n = lo + i
        k = _spf_factor(n, spf, ps, es)
        sig = 1
        for j in range(k):
            sig *= _prime_power_sigma(ps[j], es[j])
        if sig != sigma[i]:
            return n
        s = sig - n
        s_out[i] = s

        ks = 0
        if s > 1:
            if s <= spf_limit:
                ks = _spf_factor(s, spf, sp, se)
            else:
                ks = _factor_into(np.uint64(s), up, ue)
                for j in range(ks):
                    sp[j] = np.int64(up[j])
                    se[j] = ue[j]
        big_omega = 0
        for j in range(ks):
            big_omega += se[j]
        omega_out[i] = ks
        big_omega_out[i] = big_omega

        if k == 0:
            big_p = 1
            e_p = 0
            p2 = 1
            e_2 = 0
        else:
            big_p = ps[k - 1]
            e_p = es[k - 1]
            p2 = 1
            e_2 = 0
            if k >= 2:
                p2 = ps[k - 2]
                e_2 = es[k - 2]
        m = n // big_p
        if k == 0:
            sigma_m = 1
        else:
            sigma_m = (sig // _prime_power_sigma(big_p, e_p)) * _prime_power_sigma(big_p, e_p - 1)
        g = _gcd(m, sigma_m)
        pg = 1
        if g > 1:
            v = g
            while v > 1:
                pg = np.int64(spf[v])
                v //= pg
            # spf walk ends on the largest prime factor
        m_out[i] = m
        sigma_m_out[i] = sigma_m
        g_out[i] = g

        for c in range(ncp):
            x = cp_x[c]
            if n > x:
                continue
            cut = cp_cut[c]
            mask = 0
            if big_p > cut:
                mask |= 1
            if big_p > 1 and e_p < 2:
                mask |= 2
            if p2 > cut:
                mask |= 4
            if 2 * n * p2 * cp_sden[c] < cp_snum[c] * x * big_p:
                mask |= 8
            if p2 > 1 and e_2 < 2:
                mask |= 16
            if g == 1 or pg < cp_fbound[c]:
                mask |= 32
            holds_out[c, i] = mask
            wlo = cp_wlo[c]
            whi = cp_whi[c]
            cnt = 0
            for j in range(ks):
                if sp[j] > wlo and sp[j] <= whi:
                    cnt += 1
            omega_prime_out[c, i] = cnt
    return 0


def truncation_window(x: int) -> tuple[float, float]:
    """(log2 x, x**(1/sqrt(log2 x))): primes strictly above the first and at
    most the second count toward the truncated omega."""
    l2 = iterated_log(x, 2)
    return l2, float(x) ** (1.0 / l2**0.5)


@dataclass
class SegmentRecords:
    """Columnar per-n data for [lo, hi); row c of the 2-D arrays belongs to
    checkpoint ``thresholds[c]`` and is meaningful only for n <= its x."""

    lo: int
    hi: int
    thresholds: tuple[Thresholds, ...]
    sigma: np.ndarray
    s: np.ndarray
    omega: np.ndarray
    big_omega: np.ndarray
    m: np.ndarray
    sigma_m: np.ndarray
    g: np.ndarray
    omega_prime: np.ndarray
    holds: np.ndarray

    def upto(self, c: int) -> int:
        """Number of leading rows with n <= x of checkpoint c."""
        return max(0, min(self.hi, self.thresholds[c].x + 1) - self.lo)


def segment_records(lo: int, hi: int, spf: SpfTable,
                    thresholds: Sequence[Thresholds]) -> SegmentRecords:
    if hi - 1 > spf.limit:
        raise ConfigError(f"spf table (limit {spf.limit}) does not cover n < {hi}")
    ths = tuple(thresholds)
    sig = sieve_sigma(lo, hi).values
    size = hi - lo
    ncp = len(ths)
    wins = [truncation_window(t.x) for t in ths]
    cp = dict(
        cp_x=np.array([t.x for t in ths], dtype=np.int64),
        cp_cut=np.array([t.cutoff for t in ths], dtype=np.float64),
        cp_fbound=np.array([t.f_bound for t in ths], dtype=np.float64),
        cp_snum=np.array([t.d_slack.numerator for t in ths], dtype=np.int64),
        cp_sden=np.array([t.d_slack.denominator for t in ths], dtype=np.int64),
        cp_wlo=np.array([w[0] for w in wins], dtype=np.float64),
        cp_whi=np.array([w[1] for w in wins], dtype=np.float64),
    )
    out = SegmentRecords(
        lo, hi, ths, sig,
        s=np.zeros(size, dtype=np.int64),
        omega=np.zeros(size, dtype=np.int8),
        big_omega=np.zeros(size, dtype=np.int8),
        m=np.zeros(size, dtype=np.int64),
        sigma_m=np.zeros(size, dtype=np.int64),
        g=np.zeros(size, dtype=np.int64),
        omega_prime=np.zeros((ncp, size), dtype=np.int8),
        holds=np.zeros((ncp, size), dtype=np.uint8),
    )
    bad = _records_kernel(
        lo, hi, spf.spf, spf.limit, sig, cp["cp_x"], cp["cp_cut"], cp["cp_fbound"],
        cp["cp_snum"], cp["cp_sden"], cp["cp_wlo"], cp["cp_whi"],
        out.s, out.omega, out.big_omega, out.m, out.sigma_m, out.g,
        out.omega_prime, out.holds,
    )
    if bad:
        raise IntegrityError(f"sieve sigma({bad}) disagrees with the multiplicative formula")
    return out


def flags_from_mask(mask: int, m: int, sigma_m: int, g: int) -> ConditionFlags:
    holds = tuple(bool(mask >> i & 1) for i in range(6))
    return ConditionFlags(holds, int(m), int(sigma_m), int(g))


def iter_records(seg: SegmentRecords, c: int = 0) -> Iterator:
    """NRecord objects for checkpoint c, in increasing n."""
    from .stats import NRecord

    th = seg.thresholds[c]
    for i in range(seg.upto(c)):
        s = int(seg.s[i])
        yield NRecord(
            n=seg.lo + i,
            sigma_n=int(seg.sigma[i]),
            s_n=s,
            omega_s=int(seg.omega[i]),
            big_omega_s=int(seg.big_omega[i]),
            omega_prime=int(seg.omega_prime[c, i]),
            flags=flags_from_mask(int(seg.holds[c, i]), seg.m[i], seg.sigma_m[i], seg.g[i]),
            degenerate=s <= 1,
            x=th.x,
        )


def reference_record(n: int, th: Thresholds):
    """One record via factor_u64, classify and build_record (no sieves)."""
    from .stats import build_record

    prof = profile(factor_u64(n).factors)
    sigma_n = sigma_of_factors(prof.factors)
    m = n // prof.largest
    sigma_m = sigma_of_factors(factor_u64(m).factors)
    flags = classify(n, prof, sigma_m, th.x, th)
    s = sigma_n - n
    s_factors = factor_u64(s) if s >= 1 else None
    return build_record(n, sigma_n, s_factors, flags, th.x)
