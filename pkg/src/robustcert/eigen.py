"""Dense symmetric eigensolver based on cyclic Jacobi rotations.

The solver is deliberately self-contained (a numba-compiled kernel) so the
PSD certification path does not depend on LAPACK; the test suite checks it
against closed-form characteristic roots instead.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .model import InvalidDataError

SYMMETRY_TOL = 1e-12
OFFDIAG_TOL = 1e-13
MAX_SWEEPS = 60


@njit(cache=True)
def _jacobi(a, v, tol):
    """In-place cyclic Jacobi on symmetric a; rotations accumulate into v.

    Stops when the off-diagonal Frobenius norm drops below tol.
    """
    n = a.shape[0]
    for _ in range(MAX_SWEEPS):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off += 2.0 * a[p, q] * a[p, q]
        if np.sqrt(off) <= tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = 0.5 * (a[q, q] - a[p, p]) / apq
                t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                for k in range(n):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = c * apk - s * aqk
                    a[q, k] = s * apk + c * aqk
                a[p, q] = 0.0
                a[q, p] = 0.0
                for k in range(n):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = c * vkp - s * vkq
                    v[k, q] = s * vkp + c * vkq


def _prepare(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidDataError("matrix must be square")
    if not np.all(np.isfinite(m)):
        raise InvalidDataError("matrix contains non-finite entries")
    scale = max(1.0, float(np.abs(m).max()))
    asym = float(np.abs(m - m.T).max())
    if asym > SYMMETRY_TOL * scale:
        raise InvalidDataError(
            f"matrix asymmetry {asym!r} exceeds tolerance {SYMMETRY_TOL * scale!r}"
        )
    return 0.5 * (m + m.T)


def symmetric_eigh(m) -> tuple[np.ndarray, np.ndarray]:
    """All eigenvalues (ascending) and orthonormal eigenvectors (columns)."""
    a = _prepare(m)
    n = a.shape[0]
    norm = float(np.linalg.norm(a))
    v = np.eye(n)
    _jacobi(a, v, OFFDIAG_TOL * max(norm, 1e-300))
    vals = np.diag(a).copy()
    order = np.argsort(vals, kind="stable")
    return vals[order], v[:, order]


def symmetric_eigenvalues(m) -> np.ndarray:
    """All eigenvalues of a symmetric matrix, sorted ascending."""
    return symmetric_eigh(m)[0]


def min_eigenvalue(m) -> float:
    """Smallest eigenvalue of a symmetric matrix."""
    return float(symmetric_eigenvalues(m)[0])


def is_psd(m, tol: float = 1e-9) -> bool:
    """True iff the smallest eigenvalue is at least -tol."""
    return min_eigenvalue(m) >= -tol
