from __future__ import annotations

import random
from fractions import Fraction

import pytest

from aliquot_omega.arith import sieve_spf
from aliquot_omega.errors import ConfigError
from aliquot_omega.exceptional import Thresholds
from aliquot_omega.records import iter_records, reference_record, segment_records


@pytest.mark.parametrize("th", [
    Thresholds.override(20_000),
    Thresholds.literal(20_000),
    Thresholds.override(20_000, alpha=0.15, f_bound=3, d_slack=Fraction(7, 3)),
])
def test_kernel_matches_reference(th):
    spf = sieve_spf(20_000)
    seg = segment_records(1, 20_001, spf, [th])
    for r in iter_records(seg, 0):
        assert r == reference_record(r.n, th)


def test_kernel_matches_reference_sampled(spf_1e6):
    rng = random.Random(11)
    ths = [Thresholds.override(10**6), Thresholds.literal(10**6)]
    for _ in range(300):
        n = rng.randint(1, 10**6)
        seg = segment_records(n, n + 1, spf_1e6, ths)
        for c, th in enumerate(ths):
            assert next(iter_records(seg, c)) == reference_record(n, th)


def test_large_s_goes_through_factorizer():
    # s(n) above the spf limit is factored by the 64-bit route
    spf = sieve_spf(50_000)
    th = Thresholds.override(50_000)
    seg = segment_records(45_000, 50_001, spf, [th])
    assert seg.s.max() > spf.limit
    for r in list(iter_records(seg, 0))[::50]:
        assert r == reference_record(r.n, th)


def test_checkpoint_rows_respect_x():
    spf = sieve_spf(3000)
    ths = [Thresholds.override(1000), Thresholds.override(3000)]
    seg = segment_records(900, 1100, spf, ths)
    assert seg.upto(0) == 101 and seg.upto(1) == 200
    assert [r.n for r in iter_records(seg, 0)][-1] == 1000


def test_spf_too_small():
    with pytest.raises(ConfigError):
        segment_records(1, 2000, sieve_spf(1000), [Thresholds.override(2000)])
