"""Truthful budget-feasible procurement mechanisms with exact threshold payments."""
from .core import (
    Agent,
    BidProfile,
    CapExceededError,
    InputError,
    Instance,
    Outcome,
    as_rational,
    format_rational,
)
from .coverage_lp import pipage_round, round_coverage_lp, solve_coverage_lp
from .indsys import (
    EXACT_SOLVER,
    IndependenceSystemSpec,
    UnbudgetedSolver,
    Variant,
    greedy_packing_solver,
)
from .instances import generate, load, loads, save, dumps, tight_instance
from .mechanisms import (
    MECHANISM_NAMES,
    CoinSource,
    DetISK,
    GreedyISK,
    GreedySM,
    Mechanism,
    MechanismSMExact,
    MechanismSMFrac,
    RandISK,
    det_isk,
    get_mechanism,
    greedy_isk,
    greedy_sm,
    mechanism_sm_exact,
    mechanism_sm_frac,
    rand_isk,
    sm_constants,
)
from .oracle import brute_force_opt, empirical_ratio, rand_isk_expectation
from .payments import AuditReport, audit, run_with_payments, threshold_payment
from .valuations import (
    AdditiveSpec,
    CoverageSpec,
    check_monotone,
    check_submodular,
    check_xos_certificate,
)

__version__ = "0.1.0"
