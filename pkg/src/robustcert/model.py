"""Core domain types: return histories, market estimates, portfolios, and
uncertainty-set specifications.

All types are immutable after construction and every operation is a pure
function, so everything here is safe to share across threads.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field

import numpy as np


class InvalidDataError(ValueError):
    """Input data is malformed (wrong shape, non-finite entries, bad CSV)."""


class InsufficientDataError(InvalidDataError):
    """Too few observations to estimate the requested quantity."""


class InvalidParameterError(ValueError):
    """A scalar or structural parameter is out of its admissible range."""


class ConstraintViolationError(ValueError):
    """A candidate portfolio violates the simplex constraints."""


class DimensionMismatchError(ValueError):
    """Vector/matrix dimensions of two inputs do not agree."""


class Kind(enum.Enum):
    """Geometry of the perturbation set for the expected-return vector."""

    BOX = "box"
    ELLIPSOIDAL = "ellipsoidal"
    POLYHEDRAL = "polyhedral"
    BOX_ELLIPSOIDAL = "box-ellipsoidal"
    BOX_POLYHEDRAL = "box-polyhedral"
    ELLIPSOIDAL_POLYHEDRAL = "ellipsoidal-polyhedral"


COMBINED_KINDS = frozenset(
    {Kind.BOX_ELLIPSOIDAL, Kind.BOX_POLYHEDRAL, Kind.ELLIPSOIDAL_POLYHEDRAL}
)


class ShiftConvention(enum.Enum):
    """How radii interact with the stored basic shifts.

    UNIT_SET keeps the shifts exactly as given; the certificate matrices are
    built from them directly and the perturbation coefficients range over the
    unit set (radii only drive case selection for combined geometries).
    SCALE_BY_RADIUS multiplies every shift by the set radius up front so that
    radii have the conventional effect on the perturbation magnitude.
    """

    UNIT_SET = "unit-set"
    SCALE_BY_RADIUS = "scale-by-radius"


SIMPLEX_TOL = 1e-12
NEG_WEIGHT_TOL = 1e-12


def _as_readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ReturnHistory:
    """A T-by-n matrix of per-period asset returns plus asset labels."""

    returns: np.ndarray
    asset_labels: tuple[str, ...]

    def __post_init__(self):
        r = np.asarray(self.returns, dtype=float)
        if r.ndim != 2:
            raise InvalidDataError("returns must be a 2-D array (periods x assets)")
        t, n = r.shape
        if n < 1:
            raise InvalidDataError("need at least one asset")
        if t < 2:
            raise InsufficientDataError(f"need at least 2 periods, got {t}")
        if not np.all(np.isfinite(r)):
            raise InvalidDataError("returns contain non-finite entries")
        if len(self.asset_labels) != n:
            raise InvalidDataError(
                f"got {len(self.asset_labels)} labels for {n} assets"
            )
        object.__setattr__(self, "returns", _as_readonly(r))
        object.__setattr__(self, "asset_labels", tuple(self.asset_labels))

    @property
    def n_periods(self) -> int:
        return self.returns.shape[0]

    @property
    def n_assets(self) -> int:
        return self.returns.shape[1]


@dataclass(frozen=True)
class MarketEstimates:
    """Expected-return vector and covariance matrix of the asset universe."""

    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        sigma = np.asarray(self.sigma, dtype=float)
        if mu.ndim != 1:
            raise InvalidDataError("mu must be a vector")
        n = mu.shape[0]
        if sigma.shape != (n, n):
            raise DimensionMismatchError(
                f"sigma shape {sigma.shape} does not match mu length {n}"
            )
        if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(sigma))):
            raise InvalidDataError("estimates contain non-finite entries")
        if not np.array_equal(sigma, sigma.T):
            sigma = 0.5 * (sigma + sigma.T)
        object.__setattr__(self, "mu", _as_readonly(mu))
        object.__setattr__(self, "sigma", _as_readonly(sigma))

    @property
    def n_assets(self) -> int:
        return self.mu.shape[0]


@dataclass(frozen=True)
class Portfolio:
    """Long-only weights on the unit simplex. Use :func:`validate_portfolio`."""

    x: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", _as_readonly(self.x))

    @property
    def n_assets(self) -> int:
        return self.x.shape[0]


def validate_portfolio(x) -> Portfolio:
    """Check the simplex invariants and return a :class:`Portfolio`.

    Exact-zero negatives of magnitude at most 1e-12 are normalized to 0.
    Raises :class:`ConstraintViolationError` naming the offending index or
    the weight sum on failure.
    """
    v = np.asarray(x, dtype=float)
    if v.ndim != 1 or v.size < 1:
        raise InvalidDataError("weights must be a nonempty vector")
    if not np.all(np.isfinite(v)):
        raise InvalidDataError("weights contain non-finite entries")
    neg = np.flatnonzero(v < -NEG_WEIGHT_TOL)
    if neg.size:
        i = int(neg[0])
        raise ConstraintViolationError(
            f"weight {v[i]!r} at index {i} is negative beyond tolerance"
        )
    total = float(v.sum())
    if abs(total - 1.0) > SIMPLEX_TOL * max(1.0, abs(total)):
        raise ConstraintViolationError(f"weights sum to {total!r}, expected 1")
    v = np.where(v < 0.0, 0.0, v)
    return Portfolio(v)


@dataclass(frozen=True)
class UncertaintySpec:
    """Affine perturbation model for the expected-return vector.

    The realized mean is ``mu0 + sum_j zeta_j * shifts[j]`` with the
    coefficient vector ``zeta`` ranging over the geometry named by ``kind``.
    ``shifts`` is stored row-wise: row j-1 holds basic shift j.
    """

    kind: Kind
    mu0: np.ndarray
    shifts: np.ndarray
    delta_b: float | None = None
    delta_e: float | None = None
    delta_p: float | None = None
    diagonal_shifts: bool = field(default=False)

    def __post_init__(self):
        mu0 = np.asarray(self.mu0, dtype=float)
        shifts = np.asarray(self.shifts, dtype=float)
        if mu0.ndim != 1:
            raise InvalidDataError("mu0 must be a vector")
        n = mu0.shape[0]
        if shifts.shape != (n, n):
            raise DimensionMismatchError(
                f"expected {n} shift vectors of length {n}, got shape {shifts.shape}"
            )
        if not (np.all(np.isfinite(mu0)) and np.all(np.isfinite(shifts))):
            raise InvalidDataError("uncertainty data contains non-finite entries")
        for name in self.required_radii():
            val = getattr(self, name)
            if val is None or not np.isfinite(val) or val <= 0.0:
                raise InvalidParameterError(
                    f"{name} must be a positive real for kind {self.kind.value}"
                )
        if self.diagonal_shifts:
            off = shifts - np.diag(np.diag(shifts))
            if np.any(off != 0.0):
                raise InvalidParameterError(
                    "diagonal_shifts set but a shift has off-coordinate entries"
                )
        object.__setattr__(self, "mu0", _as_readonly(mu0))
        object.__setattr__(self, "shifts", _as_readonly(shifts))

    def required_radii(self) -> tuple[str, ...]:
        return {
            Kind.BOX: ("delta_b",),
            Kind.ELLIPSOIDAL: ("delta_e",),
            Kind.POLYHEDRAL: ("delta_p",),
            Kind.BOX_ELLIPSOIDAL: ("delta_b", "delta_e"),
            Kind.BOX_POLYHEDRAL: ("delta_b", "delta_p"),
            Kind.ELLIPSOIDAL_POLYHEDRAL: ("delta_e", "delta_p"),
        }[self.kind]

    @property
    def n_assets(self) -> int:
        return self.mu0.shape[0]


@dataclass(frozen=True)
class ProblemInstance:
    """Market estimates, required return level, and the uncertainty model."""

    estimates: MarketEstimates
    tau: float
    uncertainty: UncertaintySpec

    def __post_init__(self):
        if not np.isfinite(self.tau):
            raise InvalidParameterError("tau must be finite")
        if self.estimates.n_assets != self.uncertainty.n_assets:
            raise DimensionMismatchError(
                f"estimates have {self.estimates.n_assets} assets, "
                f"uncertainty has {self.uncertainty.n_assets}"
            )


def estimate_mean(history: ReturnHistory) -> np.ndarray:
    """Per-asset sample mean over all periods."""
    return history.returns.mean(axis=0)


def estimate_covariance(history: ReturnHistory) -> np.ndarray:
    """Population covariance (divisor T) of the return history.

    The output is symmetrized exactly, so it is a Gram matrix of the centered
    data and positive semidefinite up to roundoff.
    """
    r = history.returns
    t = r.shape[0]
    if t < 2:
        raise InsufficientDataError("covariance needs at least 2 periods")
    centered = r - r.mean(axis=0)
    sigma = centered.T @ centered / t
    return 0.5 * (sigma + sigma.T)


def estimate(history: ReturnHistory) -> MarketEstimates:
    """Mean and covariance estimates bundled as :class:`MarketEstimates`."""
    return MarketEstimates(estimate_mean(history), estimate_covariance(history))


def make_diagonal_shifts(magnitudes) -> np.ndarray:
    """Shift family where shift j perturbs only coordinate j by magnitudes[j]."""
    m = np.asarray(magnitudes, dtype=float)
    if m.ndim != 1:
        raise InvalidParameterError("magnitudes must be a vector")
    if not np.all(np.isfinite(m)):
        raise InvalidParameterError("magnitudes contain non-finite entries")
    if np.any(m < 0.0):
        i = int(np.flatnonzero(m < 0.0)[0])
        raise InvalidParameterError(f"magnitude at index {i} is negative")
    return np.diag(m)


def portfolio_return(mu: np.ndarray, portfolio: Portfolio) -> float:
    """Expected portfolio return mu'x."""
    mu = np.asarray(mu, dtype=float)
    if mu.shape != portfolio.x.shape:
        raise DimensionMismatchError("mu and portfolio dimensions differ")
    return float(mu @ portfolio.x)


def portfolio_variance(sigma: np.ndarray, portfolio: Portfolio) -> float:
    """Portfolio variance x'Sigma x."""
    sigma = np.asarray(sigma, dtype=float)
    n = portfolio.x.shape[0]
    if sigma.shape != (n, n):
        raise DimensionMismatchError("sigma and portfolio dimensions differ")
    return float(portfolio.x @ sigma @ portfolio.x)


def _primary_radius(spec: UncertaintySpec) -> float:
    if spec.kind in (Kind.BOX, Kind.BOX_ELLIPSOIDAL, Kind.BOX_POLYHEDRAL):
        return float(spec.delta_b)
    if spec.kind in (Kind.ELLIPSOIDAL, Kind.ELLIPSOIDAL_POLYHEDRAL):
        return float(spec.delta_e)
    return float(spec.delta_p)


def resolve_shift_convention(
    spec: UncertaintySpec, convention: ShiftConvention
) -> UncertaintySpec:
    """Return the spec as consumed by both the matrix builder and the oracle.

    Under UNIT_SET the spec passes through unchanged. Under SCALE_BY_RADIUS
    every shift is multiplied by the geometry's primary radius (the box radius
    for box-combined kinds, the ellipsoidal radius for the
    ellipsoidal-polyhedral kind) and all radii are divided by that factor, so
    the perturbation set is unchanged while the primary set becomes the unit
    set. Builder and oracle must always receive the same resolved spec.
    """
    if convention is ShiftConvention.UNIT_SET:
        return spec
    s = _primary_radius(spec)
    scale = {
        name: (getattr(spec, name) / s if getattr(spec, name) is not None else None)
        for name in ("delta_b", "delta_e", "delta_p")
    }
    return UncertaintySpec(
        kind=spec.kind,
        mu0=spec.mu0,
        shifts=spec.shifts * s,
        delta_b=scale["delta_b"],
        delta_e=scale["delta_e"],
        delta_p=scale["delta_p"],
        diagonal_shifts=spec.diagonal_shifts,
    )


def load_history_csv(path) -> ReturnHistory:
    """Read a return history from CSV: header of asset labels, one row per
    period, decimal-point reals, UTF-8."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            labels = next(reader)
        except StopIteration:
            raise InvalidDataError(f"{path}: empty file") from None
        labels = [s.strip() for s in labels]
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(labels):
                raise InvalidDataError(
                    f"{path}: line {lineno}: expected {len(labels)} fields, "
                    f"got {len(row)}"
                )
            vals = []
            for colno, cell in enumerate(row, start=1):
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise InvalidDataError(
                        f"{path}: line {lineno}, column {colno}: "
                        f"non-numeric value {cell.strip()!r}"
                    ) from None
            rows.append(vals)
    if len(rows) < 2:
        raise InsufficientDataError(
            f"{path}: need at least 2 data rows, got {len(rows)}"
        )
    return ReturnHistory(np.array(rows), tuple(labels))
