"""Robust feasibility certification for Markowitz portfolios under box,
ellipsoidal, polyhedral, and pairwise-combined mean uncertainty."""

from .certify import Certificate, FamilyVerdict, certify, certify_all
from .eigen import is_psd, min_eigenvalue, symmetric_eigh
from .lmi import (
    Case,
    CaseSelection,
    FeasibilitySystem,
    build_A,
    build_B,
    build_feasibility_systems,
    inner_products,
    select_case,
)
from .model import (
    Kind,
    MarketEstimates,
    Portfolio,
    ProblemInstance,
    ReturnHistory,
    ShiftConvention,
    UncertaintySpec,
    estimate,
    estimate_covariance,
    estimate_mean,
    load_history_csv,
    make_diagonal_shifts,
    portfolio_return,
    portfolio_variance,
    resolve_shift_convention,
    validate_portfolio,
)
from .oracle import (
    VerdictComparison,
    WorstCase,
    compare_verdicts,
    quadratic_worst_case,
    worst_case_return,
    worst_case_sampled,
)
from .solver import (
    FrontierPoint,
    SolveResult,
    Status,
    frontier,
    kkt_residual,
    solve_nominal,
    solve_robust,
)

__all__ = [
    "Case",
    "CaseSelection",
    "Certificate",
    "FamilyVerdict",
    "FeasibilitySystem",
    "FrontierPoint",
    "Kind",
    "MarketEstimates",
    "Portfolio",
    "ProblemInstance",
    "ReturnHistory",
    "ShiftConvention",
    "SolveResult",
    "Status",
    "UncertaintySpec",
    "VerdictComparison",
    "WorstCase",
    "build_A",
    "build_B",
    "build_feasibility_systems",
    "certify",
    "certify_all",
    "compare_verdicts",
    "estimate",
    "estimate_covariance",
    "estimate_mean",
    "frontier",
    "inner_products",
    "is_psd",
    "kkt_residual",
    "load_history_csv",
    "make_diagonal_shifts",
    "min_eigenvalue",
    "portfolio_return",
    "portfolio_variance",
    "quadratic_worst_case",
    "resolve_shift_convention",
    "select_case",
    "solve_nominal",
    "solve_robust",
    "symmetric_eigh",
    "validate_portfolio",
    "worst_case_return",
    "worst_case_sampled",
]

__version__ = "0.1.0"
