"""Conditions A-F defining the exceptional set E(x), per-n classification,
tallies, and the s(mP) = P s(m) + sigma(m) congruence cross-check.

Condition order matters: E_j(x) collects the n for which condition j is the
first one (in order A..F) to fail, so the first-failure counts partition E(x).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

from .arith import FactorProfile, iterated_log, sigma_of_factors
from .errors import CongruenceInapplicable
from .factor64 import factor_u64

CONDITIONS = ("A", "B", "C", "D", "E", "F")
MODES = ("literal", "override")


@dataclass(frozen=True)
class Thresholds:
    """Cutoffs for a survey bound x.

    ``literal`` uses the asymptotic definitions (alpha = 1/log3 x,
    f_bound = log2 x, no slack on D), which are degenerate at any desk-scale
    x.  ``override`` takes alpha, f_bound and a rational D-slack from the user.
    """

    x: int
    mode: str
    alpha: float
    f_bound: float
    d_slack: Fraction = Fraction(1)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown threshold mode {self.mode!r}")
        if not 0 < self.alpha <= 1:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.mode == "override" and self.f_bound < 2:
            raise ValueError(f"f_bound must be >= 2, got {self.f_bound}")
        if self.d_slack <= 0:
            raise ValueError("d_slack must be positive")
        if self.x < 1:
            raise ValueError("x must be >= 1")

    @classmethod
    def literal(cls, x: int) -> Thresholds:
        return cls(int(x), "literal", 1.0 / iterated_log(x, 3), iterated_log(x, 2))

    @classmethod
    def override(cls, x: int, alpha: float = 0.25, f_bound: float = 10.0,
                 d_slack: Fraction | int | str = 1) -> Thresholds:
        return cls(int(x), "override", float(alpha), float(f_bound),
                   Fraction(d_slack).limit_denominator(64))

    def at(self, x: int) -> Thresholds:
        """Same mode and parameters, re-evaluated at another survey bound."""
        if self.mode == "literal":
            return Thresholds.literal(x)
        return Thresholds(int(x), self.mode, self.alpha, self.f_bound, self.d_slack)

    @property
    def cutoff(self) -> float:
        """x**alpha, the bound P(n) and P2(n) must exceed (conditions A, C)."""
        return float(self.x) ** self.alpha


@dataclass(frozen=True)
class ConditionFlags:
    holds: tuple[bool, bool, bool, bool, bool, bool]
    m: int
    sigma_m: int
    g: int

    @property
    def first_failure(self) -> str | None:
        for label, ok in zip(CONDITIONS, self.holds):
            if not ok:
                return label
        return None

    @property
    def in_exceptional(self) -> bool:
        return not all(self.holds)

    def __getitem__(self, label: str) -> bool:
        return self.holds[CONDITIONS.index(label)]


def classify(n: int, profile_n: FactorProfile, sigma_m: int, x: int,
             th: Thresholds) -> ConditionFlags:
    """Evaluate conditions A-F for n <= x under the given thresholds."""
    if th.x != x:
        raise ValueError(f"thresholds built for x={th.x}, not x={x}")
    if profile_n.value != n:
        raise ValueError(f"profile does not factor n={n}")
    big_p = profile_n.largest
    p2 = profile_n.second_largest
    m = n // big_p
    m_factors = [(p, e - 1 if p == big_p else e) for p, e in profile_n.factors]
    m_factors = [(p, e) for p, e in m_factors if e > 0]
    if sigma_m != sigma_of_factors(m_factors):
        raise ValueError(f"sigma_m={sigma_m} is not sigma({m})")

    cutoff = th.cutoff
    a = big_p > cutoff
    b = n % (big_p * big_p) != 0
    c = p2 > cutoff
    d = 2 * n * p2 * th.d_slack.denominator < th.d_slack.numerator * x * big_p
    e = n % (p2 * p2) != 0
    g = math.gcd(m, sigma_m)
    f = g == 1 or factor_u64(g).factors[-1][0] < th.f_bound
    return ConditionFlags((a, b, c, d, e, f), m, sigma_m, g)


@dataclass
class ConditionTally:
    total: int = 0
    in_E: int = 0
    first_failure: list[int] = field(default_factory=lambda: [0] * 6)
    any_failure: list[int] = field(default_factory=lambda: [0] * 6)

    def add(self, flags: ConditionFlags) -> None:
        self.total += 1
        first = flags.first_failure
        if first is not None:
            self.in_E += 1
            self.first_failure[CONDITIONS.index(first)] += 1
        for i, ok in enumerate(flags.holds):
            if not ok:
                self.any_failure[i] += 1

    def merge(self, other: ConditionTally) -> ConditionTally:
        return ConditionTally(
            self.total + other.total,
            self.in_E + other.in_E,
            [a + b for a, b in zip(self.first_failure, other.first_failure)],
            [a + b for a, b in zip(self.any_failure, other.any_failure)],
        )

    @property
    def density(self) -> float:
        return self.in_E / self.total if self.total else math.nan

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "in_E": self.in_E,
            "first_failure": list(self.first_failure),
            "any_failure": list(self.any_failure),
        }

    @classmethod
    def from_dict(cls, d: dict) -> ConditionTally:
        t = cls(int(d["total"]), int(d["in_E"]),
                [int(v) for v in d["first_failure"]], [int(v) for v in d["any_failure"]])
        if len(t.first_failure) != 6 or len(t.any_failure) != 6:
            raise ValueError("tally needs six per-condition counts")
        if sum(t.first_failure) != t.in_E or t.in_E > t.total:
            raise ValueError("inconsistent tally counts")
        return t


def tally(stream: Iterable[ConditionFlags]) -> ConditionTally:
    t = ConditionTally()
    for flags in stream:
        t.add(flags)
    return t


def congruence_check(n: int, flags: ConditionFlags, p: int) -> bool:
    """Check p | s(n)  <=>  P == -sigma(m) s(m)^-1 (mod p), with n = mP.

    Needs n outside E(x) (so P does not divide m) and p not dividing s(m);
    the latter raises CongruenceInapplicable.
    """
    if flags.in_exceptional:
        raise ValueError(f"n={n} lies in E(x); the identity needs n = mP with P not dividing m")
    m = flags.m
    big_p = n // m
    s_m = flags.sigma_m - m
    if s_m % p == 0:
        raise CongruenceInapplicable(f"p={p} divides s(m)={s_m}")
    s_n = sigma_of_factors(factor_u64(n).factors) - n
    lhs = s_n % p == 0
    rhs = big_p % p == (-flags.sigma_m * pow(s_m, -1, p)) % p
    return lhs == rhs
