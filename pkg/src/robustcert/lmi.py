"""Construction of the homogenized quadratic-form pairs (A, B) whose joint
positive-semidefiniteness condition certifies robust feasibility, together
with the case selection rule for combined uncertainty geometries.

All matrices are dense (n+1)x(n+1), both triangles stored.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .model import (
    COMBINED_KINDS,
    DimensionMismatchError,
    InvalidDataError,
    InvalidParameterError,
    Kind,
    Portfolio,
    ProblemInstance,
    UncertaintySpec,
    _as_readonly,
)


@dataclass(frozen=True)
class InnerProductVector:
    """Length n+1 vector: entry 0 is mu0'x, entry j is shift_j'x."""

    v: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.v, dtype=float)
        if v.ndim != 1 or v.shape[0] < 2:
            raise InvalidDataError("inner-product vector must have length n+1 >= 2")
        if not np.all(np.isfinite(v)):
            raise InvalidDataError("inner-product vector has non-finite entries")
        object.__setattr__(self, "v", _as_readonly(v))

    @property
    def n(self) -> int:
        return self.v.shape[0] - 1


class Case(enum.Enum):
    I = "I"
    II = "II"


@dataclass(frozen=True)
class CaseSelection:
    """Outcome of the combined-geometry case rule (ties resolve to Case I)."""

    chosen: Case
    effective_radius_sq: float
    criterion_lhs: float
    criterion_rhs: float


@dataclass(frozen=True)
class SystemLabel:
    """Provenance of a feasibility system.

    scaled_v and offset record the rank-2 structure of A exactly:
    A == outer(scaled_v, scaled_v) - offset * e0 e0'.
    """

    kind: Kind
    case: Case | None
    box_index: int | None
    nominal_scale: float
    tau_scale: float
    scaled_v: np.ndarray
    offset: float

    def __post_init__(self):
        object.__setattr__(self, "scaled_v", _as_readonly(self.scaled_v))

    def describe(self) -> str:
        parts = [self.kind.value]
        if self.case is not None:
            parts.append(f"case-{self.case.value}")
        if self.box_index is not None:
            parts.append(f"M={self.box_index}")
        return ":".join(parts)


@dataclass(frozen=True)
class FeasibilitySystem:
    """A pair of symmetric (n+1)x(n+1) matrices with case metadata."""

    a: np.ndarray
    b: np.ndarray
    label: SystemLabel

    def __post_init__(self):
        object.__setattr__(self, "a", _as_readonly(self.a))
        object.__setattr__(self, "b", _as_readonly(self.b))

    @property
    def n(self) -> int:
        return self.a.shape[0] - 1


def inner_products(x: Portfolio, spec: UncertaintySpec) -> InnerProductVector:
    """Stack mu0'x and every shift_j'x into one vector."""
    if x.n_assets != spec.n_assets:
        raise DimensionMismatchError(
            f"portfolio has {x.n_assets} assets, uncertainty has {spec.n_assets}"
        )
    v = np.empty(spec.n_assets + 1)
    v[0] = spec.mu0 @ x.x
    v[1:] = spec.shifts @ x.x
    return InnerProductVector(v)


def build_A(
    v: InnerProductVector,
    tau: float,
    nominal_scale: float = 1.0,
    tau_scale: float = 1.0,
) -> np.ndarray:
    """Rank-2 constraint matrix outer(v', v') - (tau_scale*tau)^2 e0 e0',
    where v' is v with its leading entry multiplied by nominal_scale.

    Scales (1, 1) give the single-set matrix; (sqrt n, sqrt n) and (n, n)
    give the Case-I variants for the box-combined geometries.
    """
    if not np.isfinite(tau):
        raise InvalidParameterError("tau must be finite")
    if nominal_scale <= 0.0 or tau_scale <= 0.0:
        raise InvalidParameterError("scales must be positive")
    vv = v.v.copy()
    vv[0] *= nominal_scale
    a = np.outer(vv, vv)
    a[0, 0] -= (tau_scale * tau) ** 2
    return 0.5 * (a + a.T)


def build_B(kind: Kind, n: int, box_index: int | None = None) -> np.ndarray:
    """Set-geometry matrix of order (n+1).

    Ellipsoidal (also the combined ellipsoidal-polyhedral and Case-II
    box-ellipsoidal): diag(1, -1, ..., -1). Box: first diagonal 1 and
    diagonal box_index -1, rest zero. Polyhedral (also Case-II
    box-polyhedral): 1 at (0,0) and an all -1 lower-right block. Case-I
    box-ellipsoidal: n at (0,0), -1 on the rest of the diagonal. Case-I
    box-polyhedral: n^2 at (0,0) and the all -1 block.
    """
    if n < 1:
        raise InvalidParameterError("n must be at least 1")
    m = np.zeros((n + 1, n + 1))
    if kind is Kind.BOX:
        if box_index is None:
            raise InvalidParameterError("box geometry requires a box index")
        if not 1 <= box_index <= n:
            raise InvalidParameterError(
                f"box index {box_index} outside 1..{n}"
            )
        m[0, 0] = 1.0
        m[box_index, box_index] = -1.0
    elif kind in (Kind.ELLIPSOIDAL, Kind.ELLIPSOIDAL_POLYHEDRAL):
        m[0, 0] = 1.0
        m[1:, 1:] = -np.eye(n)
    elif kind is Kind.POLYHEDRAL:
        m[0, 0] = 1.0
        m[1:, 1:] = -1.0
    elif kind is Kind.BOX_ELLIPSOIDAL:
        m[0, 0] = float(n)
        m[1:, 1:] = -np.eye(n)
    elif kind is Kind.BOX_POLYHEDRAL:
        m[0, 0] = float(n) ** 2
        m[1:, 1:] = -1.0
    else:
        raise InvalidParameterError(f"unknown geometry kind {kind!r}")
    return m


def select_case(
    kind: Kind,
    n: int,
    delta_b: float | None = None,
    delta_e: float | None = None,
    delta_p: float | None = None,
) -> CaseSelection:
    """Pick the active case of a combined geometry from its radii.

    Box-ellipsoidal compares n*delta_b^2 with delta_e^2, box-polyhedral
    compares n*delta_b with delta_p, and ellipsoidal-polyhedral compares
    delta_e with delta_p (the resulting system is the same either way; the
    case is metadata only). Ties resolve to Case I.
    """
    if kind not in COMBINED_KINDS:
        raise InvalidParameterError(f"{kind.value} is not a combined kind")
    if kind is Kind.BOX_ELLIPSOIDAL:
        _require_radius("delta_b", delta_b)
        _require_radius("delta_e", delta_e)
        lhs, rhs = n * delta_b**2, delta_e**2
    elif kind is Kind.BOX_POLYHEDRAL:
        _require_radius("delta_b", delta_b)
        _require_radius("delta_p", delta_p)
        lhs, rhs = n * delta_b, delta_p
    else:
        _require_radius("delta_e", delta_e)
        _require_radius("delta_p", delta_p)
        lhs, rhs = delta_e, delta_p
    chosen = Case.I if lhs <= rhs else Case.II
    return CaseSelection(
        chosen=chosen,
        effective_radius_sq=float(min(lhs, rhs)),
        criterion_lhs=float(lhs),
        criterion_rhs=float(rhs),
    )


def _require_radius(name: str, value: float | None):
    if value is None or value <= 0.0:
        raise InvalidParameterError(f"{name} must be a positive real")


def _make_system(
    v: InnerProductVector,
    tau: float,
    kind: Kind,
    b_kind: Kind,
    nominal_scale: float,
    tau_scale: float,
    case: Case | None = None,
    box_index: int | None = None,
) -> FeasibilitySystem:
    a = build_A(v, tau, nominal_scale, tau_scale)
    b = build_B(b_kind, v.n, box_index)
    scaled_v = v.v.copy()
    scaled_v[0] *= nominal_scale
    label = SystemLabel(
        kind=kind,
        case=case,
        box_index=box_index,
        nominal_scale=nominal_scale,
        tau_scale=tau_scale,
        scaled_v=scaled_v,
        offset=(tau_scale * tau) ** 2,
    )
    return FeasibilitySystem(a, b, label)


def build_feasibility_systems(
    x: Portfolio, instance: ProblemInstance
) -> list[FeasibilitySystem]:
    """All (A, B) pairs whose certification decides the instance.

    Single geometries produce one system, except box which produces one per
    box index M = 1..n (each single-M certificate is sufficient on its own,
    so the family verdict is an any-M disjunction). Combined geometries
    dispatch on :func:`select_case`.
    """
    spec = instance.uncertainty
    v = inner_products(x, spec)
    tau = float(instance.tau)
    n = v.n
    kind = spec.kind

    if kind is Kind.ELLIPSOIDAL:
        return [_make_system(v, tau, kind, Kind.ELLIPSOIDAL, 1.0, 1.0)]
    if kind is Kind.POLYHEDRAL:
        return [_make_system(v, tau, kind, Kind.POLYHEDRAL, 1.0, 1.0)]
    if kind is Kind.BOX:
        return [
            _make_system(v, tau, kind, Kind.BOX, 1.0, 1.0, box_index=m)
            for m in range(1, n + 1)
        ]

    sel = select_case(kind, n, spec.delta_b, spec.delta_e, spec.delta_p)
    if kind is Kind.BOX_ELLIPSOIDAL:
        if sel.chosen is Case.I:
            root_n = math.sqrt(n)
            return [
                _make_system(
                    v, tau, kind, Kind.BOX_ELLIPSOIDAL, root_n, root_n, sel.chosen
                )
            ]
        return [_make_system(v, tau, kind, Kind.ELLIPSOIDAL, 1.0, 1.0, sel.chosen)]
    if kind is Kind.BOX_POLYHEDRAL:
        if sel.chosen is Case.I:
            return [
                _make_system(
                    v, tau, kind, Kind.BOX_POLYHEDRAL, float(n), float(n), sel.chosen
                )
            ]
        return [_make_system(v, tau, kind, Kind.POLYHEDRAL, 1.0, 1.0, sel.chosen)]
    # ellipsoidal-polyhedral: both cases collapse to the ellipsoidal system
    return [
        _make_system(v, tau, kind, Kind.ELLIPSOIDAL_POLYHEDRAL, 1.0, 1.0, sel.chosen)
    ]
