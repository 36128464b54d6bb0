"""Nominal Markowitz solver (primal active set) plus the robust variant via
worst-case return cuts, and frontier sweeps over required-return levels.

The quadratic program is min (1/2) x'Sigma x over the long-only simplex with
linear return constraints; active-set iteration on the KKT linear system
keeps the active constraints explicit for reporting. Phase-1 feasibility of
the cut systems is delegated to a linear program (scipy); everything else is
self-contained.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .certify import certify_all
from .lmi import build_feasibility_systems
from .model import (
    COMBINED_KINDS,
    InvalidDataError,
    InvalidParameterError,
    MarketEstimates,
    Portfolio,
    ProblemInstance,
    UncertaintySpec,
    validate_portfolio,
)
from .oracle import worst_case_return, worst_case_sampled

MAX_ITER = 500
MAX_CUTS = 100
KKT_REG = 1e-12
KKT_TOL = 1e-8
MULTIPLIER_TOL = 1e-9
CUT_TOL = 1e-8
PSD_INPUT_TOL = 1e-10


class Status(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    MAX_ITER = "max-iter"


@dataclass(frozen=True)
class SolveResult:
    """Solver outcome; variance is x'Sigma x (unregularized)."""

    x: Portfolio | None
    variance: float
    expected_return: float
    kkt_residual: float
    active_set: tuple[str, ...]
    status: Status
    multipliers: dict | None = None
    certificate_agrees: bool | None = None
    worst_case: float | None = None


@dataclass(frozen=True)
class FrontierPoint:
    tau: float
    variance: float
    x: Portfolio | None
    robust: bool
    status: Status
    expected_return: float


def _check_sigma(sigma: np.ndarray):
    n = sigma.shape[0]
    if n > 64:
        raise InvalidParameterError("solver is limited to 64 assets")
    eigmin = float(np.linalg.eigvalsh(0.5 * (sigma + sigma.T))[0])
    if eigmin < -PSD_INPUT_TOL * max(1.0, float(np.abs(sigma).max())):
        raise InvalidDataError(
            f"covariance is indefinite (min eigenvalue {eigmin!r})"
        )


def _kkt_solve(sigma, rows, rhs):
    """Equality-constrained QP minimizer and multipliers.

    Solves min (1/2)x'Sigma x s.t. rows @ x = rhs through the regularized
    KKT system; returns (x, multipliers) with the convention
    Sigma x = rows' @ multipliers.
    """
    n = sigma.shape[0]
    m = rows.shape[0]
    k = np.zeros((n + m, n + m))
    k[:n, :n] = sigma + KKT_REG * np.eye(n)
    k[:n, n:] = rows.T
    k[n:, :n] = rows
    k[n:, n:] = -KKT_REG * np.eye(m)
    rhs_full = np.concatenate([np.zeros(n), rhs])
    sol = np.linalg.solve(k, rhs_full)
    x = sol[:n]
    mult = -sol[n:]
    # Sigma x + rows' y = 0 with y = sol[n:], so multipliers are -y
    return x, mult


def _residual(sigma, g_rows, g_rhs, x, nu, gam, eta):
    """Max norm of stationarity, primal violation, and complementarity."""
    n = x.shape[0]
    stat = sigma @ x - nu * np.ones(n) - eta
    if g_rows.size:
        stat -= g_rows.T @ gam
    parts = [float(np.abs(stat).max())]
    parts.append(abs(float(x.sum()) - 1.0))
    parts.append(float(np.maximum(-x, 0.0).max(initial=0.0)))
    parts.append(float(np.maximum(-eta, 0.0).max(initial=0.0)))
    parts.append(float(np.abs(eta * x).max(initial=0.0)))
    if g_rows.size:
        slack = g_rows @ x - g_rhs
        parts.append(float(np.maximum(-slack, 0.0).max(initial=0.0)))
        parts.append(float(np.maximum(-gam, 0.0).max(initial=0.0)))
        parts.append(float(np.abs(gam * slack).max(initial=0.0)))
    return max(parts)


def _active_set_qp(sigma, g_rows, g_rhs, x0, labels):
    """Primal active-set iteration from the feasible point x0.

    Inequalities are the bounds x >= 0 followed by g_rows @ x >= g_rhs; the
    budget equality is always in the working set.
    """
    n = sigma.shape[0]
    n_g = g_rows.shape[0]
    a_ineq = np.vstack([np.eye(n), g_rows]) if n_g else np.eye(n)
    b_ineq = np.concatenate([np.zeros(n), g_rhs]) if n_g else np.zeros(n)
    ones = np.ones(n)

    x = x0.copy()
    working = list(np.flatnonzero(a_ineq @ x - b_ineq <= 1e-10))
    status = Status.MAX_ITER
    for _ in range(MAX_ITER):
        rows = np.vstack([ones[None, :], a_ineq[working]])
        rhs = np.concatenate([[1.0], b_ineq[working]])
        x_hat, mult = _kkt_solve(sigma, rows, rhs)
        p = x_hat - x
        if np.abs(p).max() <= 1e-11 * (1.0 + np.abs(x).max()):
            lam = mult[1:]
            if lam.size == 0 or lam.min() >= -MULTIPLIER_TOL:
                x = x_hat
                status = Status.OPTIMAL
                break
            working.pop(int(np.argmin(lam)))
            continue
        alpha, blocking = 1.0, None
        inactive = [j for j in range(a_ineq.shape[0]) if j not in working]
        for j in inactive:
            ap = float(a_ineq[j] @ p)
            if ap < -1e-13:
                aj = float(a_ineq[j] @ x - b_ineq[j]) / (-ap)
                if aj < alpha:
                    alpha, blocking = aj, j
        x = x + alpha * p
        if blocking is not None:
            working.append(blocking)

    # final multipliers for reporting
    rows = np.vstack([ones[None, :], a_ineq[working]])
    rhs = np.concatenate([[1.0], b_ineq[working]])
    _, mult = _kkt_solve(sigma, rows, rhs)
    nu = float(mult[0])
    eta = np.zeros(n)
    gam = np.zeros(n_g)
    for idx, j in enumerate(working):
        if j < n:
            eta[j] = max(mult[1 + idx], 0.0)
        else:
            gam[j - n] = max(mult[1 + idx], 0.0)
    resid = _residual(sigma, g_rows, g_rhs, x, nu, gam, eta)
    active = tuple(
        f"bound:{j}" if j < n else labels[j - n] for j in sorted(working)
    )
    multipliers = {"nu": nu, "gamma": gam, "eta": eta}
    return x, status, resid, active, multipliers


def _finish(estimates, x, status, resid, active, multipliers, **extra):
    x = np.maximum(x, 0.0)
    x = x / x.sum()
    port = validate_portfolio(x)
    return SolveResult(
        x=port,
        variance=float(x @ estimates.sigma @ x),
        expected_return=float(estimates.mu @ x),
        kkt_residual=resid,
        active_set=active,
        status=status,
        multipliers=multipliers,
        **extra,
    )


def _infeasible():
    return SolveResult(
        x=None,
        variance=float("nan"),
        expected_return=float("nan"),
        kkt_residual=float("nan"),
        active_set=(),
        status=Status.INFEASIBLE,
    )


def solve_nominal(estimates: MarketEstimates, tau: float) -> SolveResult:
    """Minimum-variance portfolio with expected return at least tau."""
    if not np.isfinite(tau):
        raise InvalidParameterError("tau must be finite")
    mu, sigma = estimates.mu, estimates.sigma
    n = mu.shape[0]
    _check_sigma(sigma)
    if tau > float(mu.max()) + 1e-12:
        return _infeasible()
    uniform = np.full(n, 1.0 / n)
    x0 = uniform if float(mu @ uniform) >= tau else np.eye(n)[int(np.argmax(mu))]
    g_rows = mu[None, :]
    g_rhs = np.array([tau])
    x, status, resid, active, mult = _active_set_qp(
        sigma, g_rows, g_rhs, x0, ["return"]
    )
    return _finish(estimates, x, status, resid, active, mult)


def kkt_residual(
    estimates: MarketEstimates, tau: float, x, multipliers: dict
) -> float:
    """Max norm of stationarity, primal feasibility, and complementary
    slackness for the nominal problem at (x, multipliers)."""
    x = np.asarray(x, dtype=float)
    if x.shape != estimates.mu.shape:
        raise InvalidParameterError("x and estimates dimensions differ")
    gam = np.atleast_1d(np.asarray(multipliers.get("gamma", 0.0), dtype=float))
    eta = np.asarray(multipliers.get("eta", np.zeros_like(x)), dtype=float)
    nu = float(multipliers.get("nu", 0.0))
    return _residual(
        estimates.sigma, estimates.mu[None, :], np.array([tau]), x, nu, gam, eta
    )


def _phase1(g_rows, g_rhs, n):
    """Feasible point of {simplex, g_rows x >= g_rhs} or None via LP."""
    m = g_rows.shape[0]
    # variables (x, s): maximize s subject to g_rows x - s >= g_rhs
    c = np.zeros(n + 1)
    c[-1] = -1.0
    a_ub = np.hstack([-g_rows, np.ones((m, 1))])
    a_eq = np.zeros((1, n + 1))
    a_eq[0, :n] = 1.0
    res = linprog(
        c,
        A_ub=a_ub,
        b_ub=-g_rhs,
        A_eq=a_eq,
        b_eq=[1.0],
        bounds=[(0.0, 1.0)] * n + [(None, None)],
        method="highs",
    )
    if not res.success or res.x[-1] < -1e-10:
        return None
    return np.maximum(res.x[:n], 0.0) / max(res.x[:n].sum(), 1e-30)


def _worst_case_value_and_cut(port, spec, samples, seed):
    if spec.kind in COMBINED_KINDS:
        wc = worst_case_sampled(port, spec, samples=samples, seed=seed)
    else:
        wc = worst_case_return(port, spec)
    cut = spec.mu0 + spec.shifts.T @ wc.argmin_zeta
    return wc.value, cut


def solve_robust(
    instance: ProblemInstance, samples: int = 10_000, seed: int = 0
) -> SolveResult:
    """Minimum-variance portfolio whose worst-case return stays above tau.

    The concave worst-case constraint is handled by an outer cutting-plane
    loop: each realized mean at a worst-case perturbation yields a valid
    linear cut, the master QP is re-solved by the active-set scheme, and the
    loop stops once the worst case is within CUT_TOL of tau. The result is
    re-certified through the PSD certificate machinery and the agreement is
    recorded (None when the worst-case return is negative, outside the
    squared reformulation's validity domain).
    """
    estimates, tau, spec = instance.estimates, float(instance.tau), instance.uncertainty
    sigma = estimates.sigma
    n = estimates.n_assets
    _check_sigma(sigma)

    cuts = [spec.mu0.copy()]  # worst case never exceeds the nominal return
    result = None
    status = Status.MAX_ITER
    for _ in range(MAX_CUTS):
        g_rows = np.array(cuts)
        g_rhs = np.full(len(cuts), tau)
        x0 = _phase1(g_rows, g_rhs, n)
        if x0 is None:
            return _infeasible()
        x, qp_status, resid, active, mult = _active_set_qp(
            sigma, g_rows, g_rhs, x0, [f"cut:{j}" for j in range(len(cuts))]
        )
        port = validate_portfolio(np.maximum(x, 0.0) / max(x.sum(), 1e-30))
        value, cut = _worst_case_value_and_cut(port, spec, samples, seed)
        result = (x, qp_status, resid, active, mult, value)
        if value >= tau - CUT_TOL:
            status = qp_status
            break
        cuts.append(cut)

    x, qp_status, resid, active, mult, value = result
    if status is Status.MAX_ITER and value < tau - 1e-4:
        # cuts exhausted far from feasibility: no robust-feasible point found
        return _infeasible()

    port = validate_portfolio(np.maximum(x, 0.0) / max(x.sum(), 1e-30))
    verdict = certify_all(
        build_feasibility_systems(port, ProblemInstance(estimates, tau, spec))
    )
    agrees = verdict.feasible if value >= 0.0 else None
    return _finish(
        estimates,
        x,
        status,
        resid,
        active,
        mult,
        certificate_agrees=agrees,
        worst_case=value,
    )


def frontier(
    estimates: MarketEstimates,
    spec: UncertaintySpec,
    tau_grid,
    samples: int = 10_000,
    seed: int = 0,
) -> list[FrontierPoint]:
    """Nominal and robust solves over an ascending grid of return levels."""
    taus = [float(t) for t in tau_grid]
    if not taus:
        raise InvalidParameterError("tau grid is empty")
    if any(b < a for a, b in zip(taus, taus[1:])):
        raise InvalidParameterError("tau grid must be sorted ascending")
    points = []
    for tau in taus:
        nom = solve_nominal(estimates, tau)
        points.append(
            FrontierPoint(tau, nom.variance, nom.x, False, nom.status,
                          nom.expected_return)
        )
        rob = solve_robust(
            ProblemInstance(estimates, tau, spec), samples=samples, seed=seed
        )
        points.append(
            FrontierPoint(tau, rob.variance, rob.x, True, rob.status,
                          rob.expected_return)
        )
    return points
