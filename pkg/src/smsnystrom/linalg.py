"""Dense small-matrix kernels used by every approximator.

All pseudo-inversions and inverse square roots drop spectral components
below ``rcond`` times the largest one (default ``1e-10``).  Everything goes
through a symmetric eigendecomposition or an SVD; there is no Cholesky path,
because the indefinite and near-singular cases need the spectrum anyway.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import NotPSDError, NumericError, ParameterError, PreconditionError

__all__ = [
    "DEFAULT_RCOND",
    "EigenDecomposition",
    "RankKApprox",
    "sym_eig",
    "sym_eigvals",
    "min_eigenvalue",
    "magnitude_order",
    "pinv",
    "inv_sqrt_psd",
    "signed_inv_sqrt",
    "svd",
    "spectral_norm",
    "optimal_rank_k",
]

DEFAULT_RCOND = 1e-10
SYMMETRY_RTOL = 1e-8
PSD_RTOL = 1e-8


@dataclass(frozen=True)
class EigenDecomposition:
    values: np.ndarray  # ascending
    vectors: np.ndarray  # columns are eigenvectors


@dataclass(frozen=True)
class RankKApprox:
    """Symmetric low-rank matrix ``vectors @ diag(values) @ vectors.T``."""

    vectors: np.ndarray
    values: np.ndarray

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    def reconstruct(self, rows=None, cols=None) -> np.ndarray:
        r = slice(None) if rows is None else np.asarray(rows)
        c = slice(None) if cols is None else np.asarray(cols)
        return (self.vectors[r] * self.values) @ self.vectors[c].T

    def to_dense(self) -> np.ndarray:
        return self.reconstruct()


def _square(A) -> np.ndarray:
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise PreconditionError(f"expected a square matrix, got shape {A.shape}")
    if A.shape[0] < 1:
        raise PreconditionError("expected a non-empty matrix")
    return A


def _check_symmetric(A: np.ndarray):
    scale = np.abs(A).max()
    asym = np.abs(A - A.T).max()
    if asym > SYMMETRY_RTOL * scale:
        raise PreconditionError(
            f"matrix is not symmetric: max|A - A^T| = {asym:.3e}, max|A| = {scale:.3e}"
        )


def sym_eig(A) -> EigenDecomposition:
    """Full eigendecomposition of a symmetric matrix, eigenvalues ascending."""
    A = _square(A)
    _check_symmetric(A)
    try:
        w, V = np.linalg.eigh(A)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigendecomposition did not converge: {exc}") from exc
    return EigenDecomposition(w, V)


def sym_eigvals(A) -> np.ndarray:
    """Eigenvalues of a symmetric matrix, ascending."""
    A = _square(A)
    _check_symmetric(A)
    try:
        return np.linalg.eigvalsh(A)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigendecomposition did not converge: {exc}") from exc


def min_eigenvalue(A) -> float:
    return float(sym_eigvals(A)[0])


def magnitude_order(values) -> np.ndarray:
    """Indices ordering ``values`` by descending magnitude.

    Ties in magnitude go to the larger signed value, then the lower index.
    """
    values = np.asarray(values, dtype=np.float64)
    idx = np.arange(values.size)
    return np.lexsort((idx, -values, -np.abs(values)))


def pinv(A, rcond: float = DEFAULT_RCOND) -> np.ndarray:
    """Moore-Penrose pseudoinverse via SVD, dropping ``sigma < rcond * sigma_max``."""
    if rcond <= 0:
        raise ParameterError("rcond must be positive")
    A = np.asarray(A, dtype=np.float64)
    p, q = A.shape
    if A.size == 0:
        return np.zeros((q, p))
    try:
        U, s, Vt = np.linalg.svd(A, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"SVD did not converge: {exc}") from exc
    keep = s > rcond * s[0] if s[0] > 0 else np.zeros(s.size, dtype=bool)
    return (Vt[keep].T / s[keep]) @ U[:, keep].T


def _spectrum_desc(A: np.ndarray):
    dec = sym_eig(A)
    return dec.values[::-1], dec.vectors[:, ::-1]


def inv_sqrt_psd(A, rcond: float = DEFAULT_RCOND) -> np.ndarray:
    """Symmetric pseudo-inverse square root of a numerically PSD matrix.

    Raises :class:`NotPSDError` (carrying ``lambda_min``) when the smallest
    eigenvalue is below ``-1e-8 * ||A||_2``.
    """
    if rcond <= 0:
        raise ParameterError("rcond must be positive")
    A = _square(A)
    w, V = _spectrum_desc(A)
    top = max(abs(w[0]), abs(w[-1]))
    if w[-1] < -PSD_RTOL * top:
        raise NotPSDError(
            f"matrix is not PSD: lambda_min = {w[-1]:.6e} (||A||_2 = {top:.6e})",
            float(w[-1]),
        )
    return _symmetric_root(w, V, rcond)


def _symmetric_root(w: np.ndarray, V: np.ndarray, rcond: float) -> np.ndarray:
    # w descending and numerically non-negative; keeps w > rcond * w_max
    m = V.shape[0]
    if w[0] <= 0:
        return np.zeros((m, 0))
    keep = w > rcond * w[0]
    Vk = V[:, keep]
    return (Vk * (1.0 / np.sqrt(w[keep]))) @ Vk.T


def signed_inv_sqrt(A, rcond: float = DEFAULT_RCOND) -> tuple[np.ndarray, np.ndarray]:
    """Factor ``A^+ = W @ diag(signs) @ W.T`` for symmetric, possibly indefinite ``A``.

    Components with ``|lambda| <= rcond * max|lambda|`` are dropped.  When all
    kept eigenvalues share a sign, ``W`` is the symmetric ``m x m`` root (equal
    to :func:`inv_sqrt_psd` for PSD input) and ``signs`` is constant.
    Otherwise ``W = V |Lambda|^{-1/2}`` with columns ordered by descending
    eigenvalue, and ``signs = sign(Lambda)``.
    """
    if rcond <= 0:
        raise ParameterError("rcond must be positive")
    A = _square(A)
    w, V = _spectrum_desc(A)
    m = A.shape[0]
    top = np.abs(w).max()
    if top == 0:
        return np.zeros((m, 0)), np.zeros(0)
    keep = np.abs(w) > rcond * top
    wk = w[keep]
    if (wk > 0).all():
        return _symmetric_root(w, V, rcond), np.ones(m)
    if (wk < 0).all():
        Vk = V[:, keep]
        return (Vk * (1.0 / np.sqrt(-wk))) @ Vk.T, -np.ones(m)
    return V[:, keep] * (1.0 / np.sqrt(np.abs(wk))), np.sign(wk)


def svd(A, rcond: float = DEFAULT_RCOND) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Thin SVD ``A = Wl @ diag(sigma) @ Wr.T`` keeping ``sigma > rcond * sigma_max``."""
    A = np.asarray(A, dtype=np.float64)
    p, q = A.shape
    if A.size == 0:
        return np.zeros((p, 0)), np.zeros(0), np.zeros((q, 0))
    try:
        U, s, Vt = np.linalg.svd(A, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"SVD did not converge: {exc}") from exc
    keep = s > rcond * s[0] if s[0] > 0 else np.zeros(s.size, dtype=bool)
    return U[:, keep], s[keep], Vt[keep].T


def spectral_norm(A) -> float:
    A = np.asarray(A, dtype=np.float64)
    if A.size == 0:
        return 0.0
    try:
        return float(np.linalg.svd(A, compute_uv=False)[0])
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"SVD did not converge: {exc}") from exc


def optimal_rank_k(K, k: int) -> RankKApprox:
    """Best rank-``k`` Frobenius approximation of a symmetric matrix.

    Keeps the ``k`` eigenpairs of largest magnitude.  Needs all of ``K``;
    this is the dense baseline, not a sublinear method.
    """
    K = _square(K)
    n = K.shape[0]
    if not 1 <= k <= n:
        raise ParameterError(f"k must satisfy 1 <= k <= n={n}, got {k}")
    dec = sym_eig(K)
    order = magnitude_order(dec.values)[:k]
    return RankKApprox(dec.vectors[:, order], dec.values[order])
