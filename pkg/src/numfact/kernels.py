"""Dense linear algebra used throughout: least squares, rank decisions, nullspaces, eigenvalues.

Everything is a thin contract layer over LAPACK through numpy; results are
deterministic for identical inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_RANK_TOL = 1e-8


@dataclass(frozen=True)
class RankDecision:
    rank: int
    singular_values: np.ndarray
    gap_ratio: float
    tolerance_used: float


def _as_matrix(A) -> np.ndarray:
    A = np.asarray(A)
    if A.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {A.shape}")
    return A


def lstsq_min_norm(A, b) -> np.ndarray:
    """Minimum-norm minimizer of ||A x - b||."""
    A = _as_matrix(A)
    b = np.asarray(b)
    if b.shape[0] != A.shape[0]:
        raise ValueError(f"dimension mismatch: A is {A.shape}, b has {b.shape[0]} rows")
    x, *_ = np.linalg.lstsq(A, b, rcond=None)
    return x


def singular_values(A) -> np.ndarray:
    A = _as_matrix(A)
    if A.size == 0:
        return np.zeros(0)
    return np.linalg.svd(A, compute_uv=False)


def _rank_from(s: np.ndarray, tol: float) -> RankDecision:
    if s.size == 0 or s[0] == 0:
        return RankDecision(0, s, np.inf, tol)
    rank = int(np.sum(s > tol * s[0]))
    if rank == s.size:
        gap = np.inf
    elif rank == 0:
        gap = 0.0
    else:
        gap = np.inf if s[rank] == 0 else s[rank - 1] / s[rank]
    return RankDecision(rank, s, float(gap), tol)


def svd_rank(A, tol: float = DEFAULT_RANK_TOL) -> RankDecision:
    """Numerical rank: singular values above ``tol * sigma_1``."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    return _rank_from(singular_values(A), tol)


def nullspace(A, tol: float = DEFAULT_RANK_TOL) -> tuple[np.ndarray, RankDecision]:
    """Orthonormal basis (as columns) of the numerical nullspace, and the rank record."""
    A = _as_matrix(A)
    if tol <= 0:
        raise ValueError("tol must be positive")
    n = A.shape[1]
    if A.size == 0:
        return np.eye(n, dtype=complex), RankDecision(0, np.zeros(0), np.inf, tol)
    _, s, Vh = np.linalg.svd(A, full_matrices=True)
    full = np.zeros(n)
    full[: s.size] = s
    dec = _rank_from(s, tol)
    basis = Vh[dec.rank :].conj().T
    return basis, dec


def eig_dense(A, vectors: bool = False):
    """Eigenvalues (and optionally right eigenvectors as columns) of a square matrix."""
    A = _as_matrix(A)
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"eigenvalues need a square matrix, got {A.shape}")
    if vectors:
        return np.linalg.eig(A)
    return np.linalg.eigvals(A)


def min_singular(A) -> float:
    s = singular_values(A)
    if s.size == 0:
        return 0.0
    A = np.asarray(A)
    if A.shape[0] < A.shape[1]:
        return 0.0
    return float(s[-1])


def companion_roots(coeffs_ascending) -> np.ndarray:
    """Roots of a univariate polynomial given by ascending coefficients."""
    c = np.trim_zeros(np.asarray(coeffs_ascending, dtype=complex), "b")
    n = c.size - 1
    if n < 1:
        return np.zeros(0, dtype=complex)
    C = np.zeros((n, n), dtype=complex)
    C[1:, :-1] = np.eye(n - 1)
    C[:, -1] = -c[:-1] / c[-1]
    return eig_dense(C)
