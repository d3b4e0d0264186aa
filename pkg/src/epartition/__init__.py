"""e-Partitioning procedures for false discovery rate control.

Baseline step-up procedures (eBH, BY, Su), their e-partitioning
improvements (eBH+, BY+, Su+), simultaneous rejection-set queries, post hoc
FWER and post hoc alpha, restricted combinations, a brute-force oracle and a
Monte Carlo harness.
"""

__version__ = "0.1.0"

from .calib import (
    grid_harmonic_calibrate,
    harmonic,
    lambert_w_minus1,
    simes,
    su_calibrate,
    su_multiplier,
)
from .engine import (
    CapacityError,
    MembershipResult,
    StrategyError,
    check_membership,
    critical_alpha,
    largest_prefix,
    mean_e_membership,
    monotone_membership,
    singleton_rejections,
)
from .oracle import brute_collection, brute_membership, induced_suite, simultaneous_fdp
from .stepup import PrefixRejection, by, ebh, su
from .suites import (
    EValueVector,
    PValueVector,
    by_suite,
    clique_feasibility,
    mean_e_suite,
    su_suite,
    with_feasibility,
)
