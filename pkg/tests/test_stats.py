from __future__ import annotations

import math

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from aliquot_omega.arith import primes_up_to, sieve_spf
from aliquot_omega.errors import IntegrityError
from aliquot_omega.exceptional import ConditionFlags, Thresholds, tally
from aliquot_omega.factor64 import factor_u64
from aliquot_omega.records import iter_records, segment_records, truncation_window
from aliquot_omega.stats import (
    MomentSummary,
    NRecord,
    accumulate,
    build_record,
    ks_from_counts,
    merge,
    normalize,
    summarize,
    summarize_segment,
    truncated_omega,
    z_histogram,
)

from .conftest import brute_sigma

TH = Thresholds.override


@pytest.fixture(scope="module")
def spf_2e5():
    return sieve_spf(200_000)


def records(lo, hi, x, spf, th=None):
    th = th or TH(x)
    return list(iter_records(segment_records(lo, hi, spf, [th]), 0))


def summary_of(lo, hi, x, spf, th=None):
    return summarize(records(lo, hi, x, spf, th), x)


def test_truncated_omega_examples():
    assert truncated_omega(factor_u64(1), 10**6) == 0
    assert truncated_omega(None, 10**6) == 0
    assert truncated_omega(factor_u64(16), 10**6) == 0
    assert truncated_omega(factor_u64(15), 10**6) == 2
    lo, hi = truncation_window(10**6)
    assert lo == pytest.approx(2.6258, abs=1e-4)
    assert hi == pytest.approx(10 ** (6 / math.sqrt(lo)))


def test_build_record_examples():
    flags = ConditionFlags((True,) * 6, 1, 1, 1)
    r = build_record(6, 12, factor_u64(6), flags, 100)
    assert (r.s_n, r.omega_s, r.big_omega_s, r.degenerate) == (6, 2, 2, False)
    r = build_record(2, 3, factor_u64(1), flags, 100)
    assert (r.s_n, r.omega_s, r.big_omega_s, r.degenerate) == (1, 0, 0, True)
    r = build_record(12, 28, factor_u64(16), flags, 100)
    assert (r.s_n, r.omega_s, r.big_omega_s) == (16, 1, 4)
    r = build_record(1, 1, None, flags, 100)
    assert (r.s_n, r.omega_s, r.degenerate) == (0, 0, True)
    with pytest.raises(IntegrityError):
        build_record(12, 11, factor_u64(1), flags, 100)
    with pytest.raises(IntegrityError):
        build_record(12, 28, factor_u64(15), flags, 100)
    with pytest.raises(IntegrityError):
        NRecord(6, 12, 6, 3, 2, 0, flags, False, 100)


def test_accumulate_and_normalize_at_ten(spf_2e5):
    s = MomentSummary(10)
    for r in records(1, 11, 10, spf_2e5):
        s = accumulate(r, s)
    brute = sum(len(sympy.factorint(brute_sigma(n) - n)) for n in range(2, 11))
    assert s.all.sum_omega_s == brute == 6
    st_ = normalize(s)
    assert s.log2x == 1.0
    assert st_.mean_ratio == pytest.approx(0.6)


def test_ks_point_mass():
    assert ks_from_counts([0, 7], 1.0) == pytest.approx(0.5)
    # point mass at z = -1: the worst gap is just above the atom
    assert ks_from_counts([3], 1.0) == pytest.approx(1 - 0.5 * math.erfc(1 / math.sqrt(2)))


def test_ks_matches_sorted_sample():
    rng = np.random.default_rng(3)
    counts = rng.integers(0, 50, size=9).tolist()
    L = 2.4
    z = np.repeat((np.arange(9) - L) / math.sqrt(L), counts)
    n = z.size
    cdf = np.array([0.5 * (1 + math.erf(v / math.sqrt(2))) for v in z])
    d = max(np.max(np.arange(1, n + 1) / n - cdf), np.max(cdf - np.arange(n) / n))
    assert ks_from_counts(counts, L) == pytest.approx(d, abs=1e-12)


def test_epsilon_exceed_properties(spf_2e5):
    st_ = normalize(summary_of(1, 20_001, 20_000, spf_2e5))
    eps = [0, 0.1, 0.25, 0.5, 1.0, 2.0]
    vals = [st_.epsilon_exceed(e) for e in eps]
    assert vals == sorted(vals, reverse=True)
    L = st_.log2x
    nonzero = sum(c for k, c in enumerate(st_.omega_counts) if k != L) / st_.count
    assert vals[0] == pytest.approx(nonzero) and vals[0] <= 1


def test_normalize_empty_raises():
    with pytest.raises(ValueError):
        normalize(MomentSummary(100))


def test_merge_examples(spf_2e5):
    a = summary_of(1, 3001, 10_000, spf_2e5)
    b = summary_of(3001, 10_001, 10_000, spf_2e5)
    assert merge(a, MomentSummary(10_000)) == a
    assert merge(a, b) == merge(b, a)
    with pytest.raises(IntegrityError):
        merge(a, MomentSummary(10))


def test_merge_law_at_1e5(spf_2e5):
    x = 10**5
    whole = summary_of(1, x + 1, x, spf_2e5)
    halves = merge(summary_of(1, 50_001, x, spf_2e5), summary_of(50_001, x + 1, x, spf_2e5))
    assert whole == halves
    assert whole.sum_centered_sq() == halves.sum_centered_sq()


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(2, 4999), min_size=2, max_size=6, unique=True))
def test_merge_monoid(cuts):
    spf = sieve_spf(5000)
    bounds = [1] + sorted(cuts) + [5001]
    parts = [summary_of(lo, hi, 5000, spf) for lo, hi in zip(bounds, bounds[1:])]
    left = MomentSummary(5000)
    for p in parts:
        left = merge(left, p)
    right = MomentSummary(5000)
    for p in reversed(parts):
        right = merge(p, right)
    assert left == right == summary_of(1, 5001, 5000, spf)
    if len(parts) >= 3:
        a, b, c = parts[:3]
        assert merge(merge(a, b), c) == merge(a, merge(b, c))


def test_vectorized_summary_matches_record_route(spf_2e5):
    ths = [TH(5000), TH(20_000), Thresholds.literal(20_000)]
    seg = segment_records(1, 20_001, spf_2e5, ths)
    fast = summarize_segment(seg)
    for c, th in enumerate(ths):
        recs = list(iter_records(seg, c))
        assert fast[c][0] == summarize(recs, th.x)
        assert fast[c][1] == tally(r.flags for r in recs)


def test_summary_matches_sympy_oracle(spf_2e5):
    x = 20_000
    s = summary_of(1, x + 1, x, spf_2e5)
    L = max(1.0, math.log(max(1.0, math.log(x))))
    counts = [0] * 16
    gap = gap_sq = 0
    for n in range(1, x + 1):
        sn = brute_sigma(n) - n
        f = sympy.factorint(sn) if sn > 1 else {}
        counts[len(f)] += 1
        g = sum(f.values()) - len(f)
        gap += g
        gap_sq += g * g
    assert s.all.omega_counts == counts
    assert (s.all.sum_gap, s.all.sum_gap_sq) == (gap, gap_sq)
    st_ = normalize(s)
    assert st_.log2x == L
    assert st_.mean_ratio == pytest.approx(sum(k * c for k, c in enumerate(counts)) / (x * L), rel=1e-14)
    assert st_.var_ratio == pytest.approx(
        math.fsum(c * (k - L) ** 2 for k, c in enumerate(counts)) / (x * L * L), rel=1e-14)


def test_record_invariants(spf_2e5):
    x = 10**5
    recs = records(1, x + 1, x, spf_2e5)
    L = max(1.0, math.log(math.log(x)))
    small = primes_up_to(int(L)).size
    bound = 2 * math.sqrt(L) + small
    lo, hi = truncation_window(x)
    for r in recs:
        assert r.big_omega_s >= r.omega_s >= r.omega_prime >= 0
        assert r.s_n <= x * x
        assert r.omega_s - r.omega_prime <= bound
    # literal out-of-window count on a sample, from an independent factorization
    for r in recs[:: 997]:
        if r.s_n > 1:
            outside = sum(1 for p in sympy.factorint(r.s_n) if not lo < p <= hi)
            assert outside == r.omega_s - r.omega_prime


def test_z_histogram():
    counts = [5, 10, 20, 10, 5] + [0] * 11
    h = z_histogram(counts, 2.0)
    assert len(h) == 63 and sum(h) == 50
    assert z_histogram([0] * 15 + [4], 1.0)[-1] == 4


def test_serialization_round_trip(spf_2e5):
    s = summary_of(1, 5001, 5000, spf_2e5)
    assert MomentSummary.from_dict(s.to_dict()) == s
    d = s.to_dict()
    d["count_total"] += 1
    with pytest.raises(ValueError):
        MomentSummary.from_dict(d)
