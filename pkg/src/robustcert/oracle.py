"""Independent ground truth for the certificates: closed-form and sampled
worst-case portfolio returns over each uncertainty geometry.

Shifts are interpreted over the unit perturbation set; when radii should
scale the perturbations, resolve the spec with
:func:`robustcert.model.resolve_shift_convention` before calling in here,
exactly as done for the matrix builder, so the two sides can never disagree
about the convention.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass

import numpy as np

from .lmi import inner_products
from .model import (
    COMBINED_KINDS,
    InvalidParameterError,
    Kind,
    Portfolio,
    ProblemInstance,
    UncertaintySpec,
    _as_readonly,
)

MAX_VERTEX_DIM = 16
_PGD_STEPS = 60


class Method(enum.Enum):
    CLOSED_FORM = "closed-form"
    SAMPLED = "sampled"


@dataclass(frozen=True)
class WorstCase:
    """Minimum of the realized portfolio return over the perturbation set."""

    value: float
    argmin_zeta: np.ndarray
    method: Method

    def __post_init__(self):
        object.__setattr__(self, "argmin_zeta", _as_readonly(self.argmin_zeta))


@dataclass(frozen=True)
class VerdictComparison:
    """Certificate verdict versus the oracle's direct worst-case checks."""

    agree: bool
    certificate_only: bool
    oracle_only: bool
    certificate_feasible: bool
    oracle_feasible: bool
    squared_oracle_feasible: bool
    worst_case_return: float
    quadratic_worst_case: float
    tau: float


def _norms_for(kind: Kind) -> tuple[float, ...]:
    # ord values of the unit balls constraining zeta
    return {
        Kind.BOX: (np.inf,),
        Kind.ELLIPSOIDAL: (2.0,),
        Kind.POLYHEDRAL: (1.0,),
        Kind.BOX_ELLIPSOIDAL: (np.inf, 2.0),
        Kind.BOX_POLYHEDRAL: (np.inf, 1.0),
        Kind.ELLIPSOIDAL_POLYHEDRAL: (2.0, 1.0),
    }[kind]


def _membership_excess(zeta: np.ndarray, norms: tuple[float, ...]) -> float:
    """Largest norm of zeta across the constraining unit balls."""
    vals = []
    for order in norms:
        if order == np.inf:
            vals.append(float(np.abs(zeta).max(initial=0.0)))
        elif order == 1.0:
            vals.append(float(np.abs(zeta).sum()))
        else:
            vals.append(float(np.linalg.norm(zeta)))
    return max(vals)


def worst_case_return(x: Portfolio, spec: UncertaintySpec) -> WorstCase:
    """Worst (smallest) realized return of x over the unit perturbation set.

    Single geometries use the dual-norm closed form on the shift
    inner-product vector w; combined geometries fall back to sampling the
    intersection (no closed form is available for those).
    """
    if spec.kind in COMBINED_KINDS:
        return worst_case_sampled(x, spec, samples=10_000, seed=0)
    v = inner_products(x, spec).v
    v0, w = float(v[0]), v[1:]
    n = w.shape[0]
    if spec.kind is Kind.BOX:
        value = v0 - float(np.abs(w).sum())
        zeta = -np.sign(w)
    elif spec.kind is Kind.ELLIPSOIDAL:
        norm = float(np.linalg.norm(w))
        value = v0 - norm
        zeta = -w / norm if norm > 0.0 else np.zeros(n)
    else:  # polyhedral: lowest index wins ties
        k = int(np.argmax(np.abs(w)))
        value = v0 - float(np.abs(w[k]))
        zeta = np.zeros(n)
        zeta[k] = -np.sign(w[k]) if w[k] != 0.0 else 0.0
    return WorstCase(value=value, argmin_zeta=zeta, method=Method.CLOSED_FORM)


def _candidate_points(
    n: int, norms: tuple[float, ...], samples: int, rng: np.random.Generator
) -> np.ndarray:
    points = [np.zeros((1, n))]
    if np.inf in norms:
        if n <= MAX_VERTEX_DIM:
            grid = np.array(
                np.meshgrid(*([[-1.0, 1.0]] * n), indexing="ij")
            ).reshape(n, -1).T
            points.append(grid)
        else:
            warnings.warn(
                f"dimension {n} exceeds {MAX_VERTEX_DIM}: "
                "sampling box vertices instead of enumerating them",
                stacklevel=3,
            )
            points.append(rng.choice([-1.0, 1.0], size=(samples, n)))
    # the 2n unit cross-polytope vertices are worth having for every geometry
    points.append(np.eye(n))
    points.append(-np.eye(n))
    directions = rng.standard_normal((samples, n))
    lengths = np.linalg.norm(directions, axis=1)
    directions = directions[lengths > 0.0] / lengths[lengths > 0.0, None]
    for order in norms:
        if order == np.inf:
            scale = np.abs(directions).max(axis=1)
        elif order == 1.0:
            scale = np.abs(directions).sum(axis=1)
        else:
            scale = np.ones(directions.shape[0])
        points.append(directions / scale[:, None])
    cand = np.vstack(points)
    # pull every candidate inside the intersection (scaling down preserves
    # membership in all three ball types)
    if len(norms) > 1:
        excess = np.ones(cand.shape[0])
        for order in norms:
            if order == np.inf:
                e = np.abs(cand).max(axis=1)
            elif order == 1.0:
                e = np.abs(cand).sum(axis=1)
            else:
                e = np.linalg.norm(cand, axis=1)
            excess = np.maximum(excess, e)
        cand = cand / excess[:, None]
    return cand


def _project_l1(z: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the unit l1 ball (sort-based)."""
    if np.abs(z).sum() <= 1.0:
        return z
    u = np.sort(np.abs(z))[::-1]
    css = np.cumsum(u)
    k = np.nonzero(u * np.arange(1, z.size + 1) > (css - 1.0))[0][-1]
    theta = (css[k] - 1.0) / (k + 1.0)
    return np.sign(z) * np.maximum(np.abs(z) - theta, 0.0)


def _project(z: np.ndarray, norms: tuple[float, ...]) -> np.ndarray:
    for order in norms:
        if order == np.inf:
            z = np.clip(z, -1.0, 1.0)
        elif order == 1.0:
            z = _project_l1(z)
        else:
            norm = np.linalg.norm(z)
            if norm > 1.0:
                z = z / norm
    excess = _membership_excess(z, norms)
    if excess > 1.0:
        z = z / excess
    return z


def _polish(
    zeta: np.ndarray, w: np.ndarray, norms: tuple[float, ...]
) -> np.ndarray:
    """Projected-gradient descent of the linear return over the set."""
    wn = float(np.linalg.norm(w))
    if wn == 0.0:
        return zeta
    step = 4.0 / wn
    z = zeta.copy()
    for _ in range(_PGD_STEPS):
        z = _project(z - step * w, norms)
    return z


def worst_case_sampled(
    x: Portfolio, spec: UncertaintySpec, samples: int = 10_000, seed: int = 0
) -> WorstCase:
    """Sampled worst-case return: deterministic given the seed.

    Candidates are the origin, the box vertices (enumerated up to dimension
    16, sampled beyond), the cross-polytope vertices, and random directions
    scaled to each relevant boundary; intersection geometries rescale every
    candidate into the set. The best candidate is polished by projected
    gradient descent, so single-set values match the closed forms tightly.
    """
    if samples < 1:
        raise InvalidParameterError("samples must be at least 1")
    v = inner_products(x, spec).v
    v0, w = float(v[0]), v[1:]
    n = w.shape[0]
    norms = _norms_for(spec.kind)
    rng = np.random.Generator(np.random.Philox(seed))
    cand = _candidate_points(n, norms, samples, rng)
    vals = v0 + cand @ w
    best = int(np.argmin(vals))
    zeta = _polish(cand[best], w, norms)
    value = v0 + float(w @ zeta)
    if value > vals[best]:
        zeta, value = cand[best], float(vals[best])
    return WorstCase(value=value, argmin_zeta=zeta, method=Method.SAMPLED)


def quadratic_worst_case(
    x: Portfolio, spec: UncertaintySpec, samples: int = 10_000, seed: int = 0
) -> float:
    """Minimum of the squared realized return over the sampled set.

    Equals (min return)^2 only when the return keeps one sign over the set;
    when sampled returns change sign, the zero crossing on the segment
    between the extreme candidates lies in the (convex) set, so 0 is
    returned.
    """
    if samples < 1:
        raise InvalidParameterError("samples must be at least 1")
    v = inner_products(x, spec).v
    v0, w = float(v[0]), v[1:]
    norms = _norms_for(spec.kind)
    rng = np.random.Generator(np.random.Philox(seed))
    cand = _candidate_points(w.shape[0], norms, samples, rng)
    lo = _polish(cand[int(np.argmin(v0 + cand @ w))], w, norms)
    hi = _polish(cand[int(np.argmax(v0 + cand @ w))], -w, norms)
    vlo = v0 + float(w @ lo)
    vhi = v0 + float(w @ hi)
    if vlo < 0.0 < vhi:
        return 0.0
    return float(min(vlo * vlo, vhi * vhi))


def compare_verdicts(
    x: Portfolio,
    instance: ProblemInstance,
    certificate_feasible: bool,
    samples: int = 10_000,
    seed: int = 0,
) -> VerdictComparison:
    """Cross-check a certificate verdict against the direct oracles."""
    spec = instance.uncertainty
    tau = float(instance.tau)
    wc = worst_case_return(x, spec)
    qwc = quadratic_worst_case(x, spec, samples=samples, seed=seed)
    oracle_ok = wc.value >= tau - 1e-9
    squared_ok = qwc >= tau * tau - 1e-9
    return VerdictComparison(
        agree=certificate_feasible == oracle_ok,
        certificate_only=certificate_feasible and not oracle_ok,
        oracle_only=oracle_ok and not certificate_feasible,
        certificate_feasible=certificate_feasible,
        oracle_feasible=oracle_ok,
        squared_oracle_feasible=squared_ok,
        worst_case_return=wc.value,
        quadratic_worst_case=qwc,
        tau=tau,
    )
