"""Per-n records and mergeable moment summaries of omega(s(n)).

A MomentSummary holds only integers: the histogram of omega(s(n)) values
plus integer sums of the truncated omega and of the Omega - omega gap.  Every
centered or standardized statistic (variance about log2 x, the z histogram,
the Kolmogorov-Smirnov distance, epsilon-exceedance fractions) is a function
of the omega histogram and the survey-level log2 x, so merging summaries is
exact, associative and commutative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .arith import iterated_log
from .errors import IntegrityError
from .exceptional import ConditionFlags, ConditionTally
from .factor64 import Factorization64
from .records import OMEGA_WIDTH, SegmentRecords, truncation_window

POPULATIONS = ("all", "filtered")
Z_BINS = 61
Z_RANGE = 6.0


@dataclass(frozen=True)
class NRecord:
    n: int
    sigma_n: int
    s_n: int
    omega_s: int
    big_omega_s: int
    omega_prime: int
    flags: ConditionFlags
    degenerate: bool
    x: int

    def __post_init__(self):
        if self.s_n != self.sigma_n - self.n:
            raise IntegrityError(f"s({self.n}) != sigma - n")
        if not self.big_omega_s >= self.omega_s >= self.omega_prime >= 0:
            raise IntegrityError(f"record {self.n}: need Omega >= omega >= omega' >= 0")


def truncated_omega(s_factors: Factorization64 | None, x: int) -> int:
    """Distinct primes p | s(n) with log2 x < p <= x**(1/sqrt(log2 x)).

    ``None`` stands for s(n) = 0 (n = 1) and counts nothing.
    """
    if s_factors is None:
        return 0
    lo, hi = truncation_window(x)
    return sum(1 for p, _ in s_factors.factors if lo < p <= hi)


def build_record(n: int, sigma_n: int, s_factors: Factorization64 | None,
                 flags: ConditionFlags, x: int) -> NRecord:
    if sigma_n < n:
        raise IntegrityError(f"sigma({n}) = {sigma_n} < n")
    s = sigma_n - n
    if s_factors is None:
        if s != 0:
            raise IntegrityError(f"missing factorization of s({n}) = {s}")
        omega = big_omega = 0
    else:
        if s_factors.value != s:
            raise IntegrityError(f"factorization of {s_factors.value} given for s({n}) = {s}")
        omega, big_omega = s_factors.omega, s_factors.big_omega
    return NRecord(n, sigma_n, s, omega, big_omega, truncated_omega(s_factors, x),
                   flags, s <= 1, x)


@dataclass
class PopulationMoments:
    count: int = 0
    count_degenerate: int = 0
    omega_counts: list[int] = field(default_factory=lambda: [0] * OMEGA_WIDTH)
    sum_omega_prime: int = 0
    sum_gap: int = 0
    sum_gap_sq: int = 0

    @property
    def sum_omega_s(self) -> int:
        return sum(k * c for k, c in enumerate(self.omega_counts))

    @property
    def sum_omega_s_sq(self) -> int:
        return sum(k * k * c for k, c in enumerate(self.omega_counts))

    def add(self, r: NRecord) -> None:
        gap = r.big_omega_s - r.omega_s
        self.count += 1
        self.count_degenerate += r.degenerate
        self.omega_counts[r.omega_s] += 1
        self.sum_omega_prime += r.omega_prime
        self.sum_gap += gap
        self.sum_gap_sq += gap * gap

    def merge(self, other: PopulationMoments) -> PopulationMoments:
        return PopulationMoments(
            self.count + other.count,
            self.count_degenerate + other.count_degenerate,
            [a + b for a, b in zip(self.omega_counts, other.omega_counts)],
            self.sum_omega_prime + other.sum_omega_prime,
            self.sum_gap + other.sum_gap,
            self.sum_gap_sq + other.sum_gap_sq,
        )

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "count_degenerate": self.count_degenerate,
            "omega_counts": list(self.omega_counts),
            "sum_omega_prime": self.sum_omega_prime,
            "sum_gap": self.sum_gap,
            "sum_gap_sq": self.sum_gap_sq,
        }

    @classmethod
    def from_dict(cls, d: dict) -> PopulationMoments:
        p = cls(int(d["count"]), int(d["count_degenerate"]),
                [int(v) for v in d["omega_counts"]], int(d["sum_omega_prime"]),
                int(d["sum_gap"]), int(d["sum_gap_sq"]))
        if len(p.omega_counts) != OMEGA_WIDTH or sum(p.omega_counts) != p.count:
            raise ValueError("omega histogram does not match the population count")
        return p


@dataclass
class MomentSummary:
    """Moment sums over a set of n <= x, for all n and for n outside E(x)."""

    x: int
    count_total: int = 0
    count_in_E: int = 0
    count_degenerate: int = 0
    all: PopulationMoments = field(default_factory=PopulationMoments)
    filtered: PopulationMoments = field(default_factory=PopulationMoments)

    @property
    def log2x(self) -> float:
        return iterated_log(self.x, 2)

    def population(self, name: str) -> PopulationMoments:
        if name not in POPULATIONS:
            raise ValueError(f"unknown population {name!r}")
        return getattr(self, name)

    def sum_centered_sq(self, name: str = "all") -> float:
        """Sum of (omega(s(n)) - log2 x)**2 over the population."""
        L = self.log2x
        return math.fsum(c * (k - L) ** 2 for k, c in enumerate(self.population(name).omega_counts))

    def accumulate(self, r: NRecord) -> MomentSummary:
        if r.x != self.x:
            raise IntegrityError(f"record built for x={r.x} fed to summary for x={self.x}")
        self.count_total += 1
        self.count_degenerate += r.degenerate
        self.all.add(r)
        if r.flags.in_exceptional:
            self.count_in_E += 1
        else:
            self.filtered.add(r)
        return self

    def merge(self, other: MomentSummary) -> MomentSummary:
        if other.x != self.x:
            raise IntegrityError(f"cannot merge summaries for x={self.x} and x={other.x}")
        return MomentSummary(
            self.x,
            self.count_total + other.count_total,
            self.count_in_E + other.count_in_E,
            self.count_degenerate + other.count_degenerate,
            self.all.merge(other.all),
            self.filtered.merge(other.filtered),
        )

    def to_dict(self) -> dict:
        return {
            "x": self.x,
            "count_total": self.count_total,
            "count_in_E": self.count_in_E,
            "count_degenerate": self.count_degenerate,
            "all": self.all.to_dict(),
            "filtered": self.filtered.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> MomentSummary:
        s = cls(int(d["x"]), int(d["count_total"]), int(d["count_in_E"]),
                int(d["count_degenerate"]), PopulationMoments.from_dict(d["all"]),
                PopulationMoments.from_dict(d["filtered"]))
        if s.all.count != s.count_total or s.filtered.count != s.count_total - s.count_in_E:
            raise ValueError("population counts disagree with the totals")
        return s


def accumulate(record: NRecord, summary: MomentSummary) -> MomentSummary:
    return summary.accumulate(record)


def merge(a: MomentSummary, b: MomentSummary) -> MomentSummary:
    return a.merge(b)


def summarize(records: Iterable[NRecord], x: int) -> MomentSummary:
    s = MomentSummary(x)
    for r in records:
        s.accumulate(r)
    return s


# first unset bit of a six-bit "holds" mask, -1 when all conditions hold
_FIRST_FAIL = np.array(
    [next((i for i in range(6) if not mask >> i & 1), -1) for mask in range(64)],
    dtype=np.int64,
)


def summarize_segment(seg: SegmentRecords) -> list[tuple[MomentSummary, ConditionTally]]:
    """Vectorized summaries and tallies, one per checkpoint of the segment."""
    out = []
    for c, th in enumerate(seg.thresholds):
        k = seg.upto(c)
        summary = MomentSummary(th.x)
        tal = ConditionTally()
        if k == 0:
            out.append((summary, tal))
            continue
        omega = seg.omega[:k].astype(np.int64)
        gap = seg.big_omega[:k].astype(np.int64) - omega
        wprime = seg.omega_prime[c, :k].astype(np.int64)
        degenerate = seg.s[:k] <= 1
        holds = seg.holds[c, :k]
        first = _FIRST_FAIL[holds]
        in_e = first >= 0

        for name, mask in (("all", None), ("filtered", ~in_e)):
            om = omega if mask is None else omega[mask]
            gp = gap if mask is None else gap[mask]
            pop = PopulationMoments(
                count=int(om.shape[0]),
                count_degenerate=int(np.count_nonzero(degenerate if mask is None else degenerate[mask])),
                omega_counts=[int(v) for v in np.bincount(om, minlength=OMEGA_WIDTH)],
                sum_omega_prime=int((wprime if mask is None else wprime[mask]).sum()),
                sum_gap=int(gp.sum()),
                sum_gap_sq=int((gp * gp).sum()),
            )
            setattr(summary, name, pop)
        summary.count_total = k
        summary.count_in_E = int(np.count_nonzero(in_e))
        summary.count_degenerate = int(np.count_nonzero(degenerate))

        tal.total = k
        tal.in_E = summary.count_in_E
        tal.first_failure = [int(v) for v in np.bincount(first[in_e], minlength=6)]
        tal.any_failure = [int(np.count_nonzero((holds >> i) & 1 == 0)) for i in range(6)]
        out.append((summary, tal))
    return out


# ---------------------------------------------------------------------------
# normalization
# ---------------------------------------------------------------------------


def _normal_cdf(z: float) -> float:
    return 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))


def ks_from_counts(omega_counts: Sequence[int], log2x: float) -> float:
    """KS distance between the standardized omega sample and N(0, 1).

    The sample is a step function on the atoms z_k = (k - L)/sqrt(L); the
    supremum is attained at an atom, either at its left limit or its value.
    """
    total = sum(omega_counts)
    if total == 0:
        raise ValueError("KS statistic of an empty sample")
    root = math.sqrt(log2x)
    below = 0
    worst = 0.0
    for k, c in enumerate(omega_counts):
        if c == 0:
            continue
        phi = _normal_cdf((k - log2x) / root)
        worst = max(worst, abs(below / total - phi))
        below += c
        worst = max(worst, abs(below / total - phi))
    return worst


def epsilon_exceed(omega_counts: Sequence[int], log2x: float, eps: float) -> float:
    """Fraction of the sample with |omega - log2 x| >= eps * log2 x."""
    total = sum(omega_counts)
    if total == 0:
        raise ValueError("empty sample")
    hit = sum(c for k, c in enumerate(omega_counts) if abs(k - log2x) >= eps * log2x)
    return hit / total


def z_histogram(omega_counts: Sequence[int], log2x: float) -> list[int]:
    """Counts of z = (omega - L)/sqrt(L) in 61 equal bins on [-6, 6], with an
    underflow bin first and an overflow bin last (63 entries)."""
    bins = [0] * (Z_BINS + 2)
    width = 2 * Z_RANGE / Z_BINS
    root = math.sqrt(log2x)
    for k, c in enumerate(omega_counts):
        if not c:
            continue
        z = (k - log2x) / root
        if z < -Z_RANGE:
            idx = 0
        elif z > Z_RANGE:
            idx = Z_BINS + 1
        else:
            idx = 1 + min(int((z + Z_RANGE) / width), Z_BINS - 1)
        bins[idx] += c
    return bins


@dataclass(frozen=True)
class NormalizedStats:
    x: int
    population: str
    count: int
    log2x: float
    mean_ratio: float
    var_ratio: float
    second_moment_ratio: float
    gap_mean: float
    gap_sq_ratio: float
    ks_stat: float
    omega_counts: tuple[int, ...]

    def epsilon_exceed(self, eps: float) -> float:
        return epsilon_exceed(self.omega_counts, self.log2x, eps)


def normalize(summary: MomentSummary, population: str = "all") -> NormalizedStats:
    pop = summary.population(population)
    if pop.count == 0:
        raise ValueError(f"no records in the {population!r} population at x={summary.x}")
    N = pop.count
    L = summary.log2x
    return NormalizedStats(
        x=summary.x,
        population=population,
        count=N,
        log2x=L,
        mean_ratio=pop.sum_omega_s / (N * L),
        var_ratio=summary.sum_centered_sq(population) / (N * L * L),
        second_moment_ratio=pop.sum_omega_s_sq / (N * L * L),
        gap_mean=pop.sum_gap / N,
        gap_sq_ratio=pop.sum_gap_sq / (N * L * L),
        ks_stat=ks_from_counts(pop.omega_counts, L),
        omega_counts=tuple(pop.omega_counts),
    )
