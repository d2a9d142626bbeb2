"""Dense small-matrix utilities shared by every other module.

Everything here operates on plain numpy arrays at desk scale (dimension
at most 64). Values are treated as immutable once built.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_EIG_DIM = 64
SYM_TOL = 1e-9


class EigenvalueConvergenceError(RuntimeError):
    """Eigenvalue iteration failed to converge within the solver's cap."""


def _as_matrix(M, name: str = "matrix") -> np.ndarray:
    A = np.asarray(M, dtype=float)
    if A.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got ndim={A.ndim}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} has non-finite entries")
    return A


def skew(v) -> np.ndarray:
    """Cross-product matrix [v~] with skew(v) @ w == cross(v, w)."""
    v = np.asarray(v, dtype=float).reshape(3)
    if not np.all(np.isfinite(v)):
        raise ValueError("skew input has non-finite entries")
    return np.array([
        [0.0, -v[2], v[1]],
        [v[2], 0.0, -v[0]],
        [-v[1], v[0], 0.0],
    ])


def kron(A, B) -> np.ndarray:
    """Kronecker product of two finite matrices."""
    return np.kron(_as_matrix(A, "A"), _as_matrix(B, "B"))


@dataclass(frozen=True)
class ComplexEigenSet:
    """All eigenvalues of a real square matrix, sorted by (real, imag).

    Sorting makes conjugate pairs adjacent and the ordering deterministic,
    so tests can compare sets elementwise.
    """

    values: tuple
    tolerance: float = 1e-8

    def __len__(self) -> int:
        return len(self.values)

    def as_array(self) -> np.ndarray:
        return np.array(self.values, dtype=complex)


def eigenvalues(M, tolerance: float = 1e-8) -> ComplexEigenSet:
    """Eigenvalues of a real square matrix of dimension at most 64.

    Raises EigenvalueConvergenceError if the underlying QR iteration
    fails to converge.
    """
    A = _as_matrix(M)
    n, m = A.shape
    if n != m:
        raise ValueError(f"matrix must be square, got {n}x{m}")
    if n > MAX_EIG_DIM:
        raise ValueError(f"dimension {n} exceeds supported maximum {MAX_EIG_DIM}")
    try:
        vals = np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise EigenvalueConvergenceError(str(exc)) from exc
    order = np.lexsort((vals.imag, vals.real))
    return ComplexEigenSet(values=tuple(vals[order]), tolerance=tolerance)


def require_symmetric(M, tol: float = SYM_TOL, name: str = "matrix") -> np.ndarray:
    """Return M if symmetric within tol (absolute), else raise ValueError."""
    A = _as_matrix(M, name)
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"{name} must be square, got {A.shape}")
    dev = np.max(np.abs(A - A.T)) if A.size else 0.0
    if dev > tol:
        raise ValueError(f"{name} asymmetric beyond tol: max deviation {dev:.3e} > {tol:.3e}")
    return A


def symmetric_eigenvalues(M, tol: float = SYM_TOL) -> np.ndarray:
    """Ascending real eigenvalues of a symmetric matrix (symmetry enforced)."""
    A = require_symmetric(M, tol)
    return np.linalg.eigvalsh(0.5 * (A + A.T))


def is_negative_definite(M, tol: float = SYM_TOL) -> bool:
    """True iff the symmetric matrix M has max eigenvalue < -tol."""
    return bool(symmetric_eigenvalues(M, tol)[-1] < -tol)


def is_positive_definite(M, tol: float = SYM_TOL) -> bool:
    """True iff the symmetric matrix M has min eigenvalue > tol."""
    return bool(symmetric_eigenvalues(M, tol)[0] > tol)


def eigenset_distance(a, b) -> float:
    """Largest pairwise distance under a best matching of two eigenvalue sets.

    Plain lexicographic sorting can interleave conjugate pairs whose real
    parts differ only in the last bits, so set comparisons pair values by
    repeatedly matching the globally closest remaining pair instead.
    """
    va = a.as_array() if isinstance(a, ComplexEigenSet) else np.asarray(a, dtype=complex)
    vb = b.as_array() if isinstance(b, ComplexEigenSet) else np.asarray(b, dtype=complex)
    if va.size != vb.size:
        raise ValueError(f"eigenvalue sets differ in size: {va.size} vs {vb.size}")
    dist = np.abs(va[:, None] - vb[None, :])
    worst = 0.0
    for _ in range(va.size):
        i, j = np.unravel_index(np.argmin(dist), dist.shape)
        worst = max(worst, float(dist[i, j]))
        dist[i, :] = np.inf
        dist[:, j] = np.inf
    return worst


def solve(A, b) -> np.ndarray:
    """Solve A x = b for square nonsingular A."""
    M = _as_matrix(A, "A")
    rhs = np.asarray(b, dtype=float)
    if not np.all(np.isfinite(rhs)):
        raise ValueError("right-hand side has non-finite entries")
    return np.linalg.solve(M, rhs)
