"""Prime-factor statistics of aliquot sums s(n) = sigma(n) - n."""

from .analytic import (
    APCount,
    MertensWindow,
    QDivisibilityReport,
    SmoothQuery,
    mertens_window,
    primes_in_ap,
    psi_smooth,
    q_divides_s_count,
    q_divides_s_survey,
)
from .arith import (
    FactorProfile,
    SigmaTable,
    SpfTable,
    aliquot_sum,
    iterated_log,
    profile,
    sieve_sigma,
    sieve_spf,
)
from .exceptional import (
    ConditionFlags,
    ConditionTally,
    Thresholds,
    classify,
    congruence_check,
    tally,
)
from .factor64 import Factorization64, factor_u64, is_prime_u64
from .stats import (
    MomentSummary,
    NormalizedStats,
    NRecord,
    accumulate,
    build_record,
    merge,
    normalize,
    truncated_omega,
)
from .survey import SurveyConfig, SurveyOutput, resume, run_survey

__version__ = "0.1.0"
