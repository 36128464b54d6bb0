"""Search for a multiplier lambda >= 0 making A - lambda*B positive
semidefinite.

The search maximizes g(lambda) = lambda_min(A - lambda*B), which is concave
(pointwise minimum of functions affine in lambda), by bracket doubling
followed by golden-section refinement. g can be non-smooth at eigenvalue
crossings, so a derivative-free method is used on purpose.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .eigen import is_psd, min_eigenvalue
from .lmi import FeasibilitySystem
from .model import InvalidDataError, InvalidParameterError

DEFAULT_TOL = 1e-8
LAMBDA_CAP_FACTOR = 1e12
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class Certificate:
    """Result of the multiplier search for one feasibility system."""

    feasible: bool
    lambda_star: float | None
    min_eig_at_lambda: float
    iterations: int
    tolerance_used: float
    label_text: str = ""
    warning: str | None = None


@dataclass(frozen=True)
class FamilyVerdict:
    """Any-system aggregation over a list of feasibility systems."""

    feasible: bool
    winning_label: str | None
    certificates: tuple[Certificate, ...]
    feasible_count: int


def multiplier_objective(system: FeasibilitySystem, lam: float) -> float:
    """g(lambda) = smallest eigenvalue of A - lambda*B."""
    return min_eigenvalue(system.a - lam * system.b)


def certify(system: FeasibilitySystem, tol: float = DEFAULT_TOL) -> Certificate:
    """Decide whether some lambda >= 0 makes A - lambda*B PSD.

    The verdict threshold is -tol scaled by 1 + ||A||_F. A feasible verdict
    is re-verified with an independent PSD check at twice the tolerance.
    """
    a, b = system.a, system.b
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise InvalidDataError("feasibility system contains non-finite entries")
    if tol <= 0.0:
        raise InvalidParameterError("tol must be positive")
    norm_a = float(np.linalg.norm(a))
    norm_b = float(np.linalg.norm(b))
    threshold = tol * (1.0 + norm_a)
    lam_cap = LAMBDA_CAP_FACTOR * (1.0 + norm_a / max(norm_b, 1e-30))

    evals = 0

    def g(lam: float) -> float:
        nonlocal evals
        evals += 1
        return min_eigenvalue(a - lam * b)

    # lambda = 0 first: settles instances where B contributes nothing useful
    g0 = g(0.0)
    best_lam, best_val = 0.0, g0

    warning = None
    lo, hi = 0.0, 1.0
    g_hi = g(hi)
    if g_hi > best_val:
        best_lam, best_val = hi, g_hi
    # double the right end while g is still increasing there
    while g_hi >= best_val and best_val < threshold:
        nxt = 2.0 * hi
        if nxt > lam_cap:
            warning = "bracket expansion hit the lambda cap"
            break
        g_next = g(nxt)
        if g_next <= g_hi:
            hi = nxt
            break
        hi, g_hi = nxt, g_next
        best_lam, best_val = hi, g_hi

    # golden-section maximization on [lo, hi]
    width_tol = 1e-10 * (1.0 + hi)
    c = hi - GOLDEN * (hi - lo)
    d = lo + GOLDEN * (hi - lo)
    gc, gd = g(c), g(d)
    while hi - lo > width_tol:
        if gc >= gd:
            hi, d, gd = d, c, gc
            c = hi - GOLDEN * (hi - lo)
            gc = g(c)
        else:
            lo, c, gc = c, d, gd
            d = lo + GOLDEN * (hi - lo)
            gd = g(d)
    for lam, val in ((c, gc), (d, gd)):
        if val > best_val:
            best_lam, best_val = lam, val

    feasible = best_val >= -threshold
    if feasible and not is_psd(a - best_lam * b, 2.0 * threshold):
        # re-verification failed: report honestly as infeasible
        feasible = False
        warning = "re-verification of the certificate failed"
    return Certificate(
        feasible=feasible,
        lambda_star=float(best_lam) if feasible else None,
        min_eig_at_lambda=float(best_val),
        iterations=evals,
        tolerance_used=threshold,
        label_text=system.label.describe(),
        warning=warning,
    )


def certify_all(
    systems: list[FeasibilitySystem], tol: float = DEFAULT_TOL
) -> FamilyVerdict:
    """Certify every system; the family is feasible iff any one certifies."""
    if not systems:
        raise InvalidParameterError("need at least one feasibility system")
    certs = tuple(certify(s, tol) for s in systems)
    winner = next((c for c in certs if c.feasible), None)
    return FamilyVerdict(
        feasible=winner is not None,
        winning_label=winner.label_text if winner else None,
        certificates=certs,
        feasible_count=sum(c.feasible for c in certs),
    )
