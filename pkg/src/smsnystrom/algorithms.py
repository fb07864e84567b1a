"""Sublinear Nystrom and CUR approximations of similarity matrices.

Every approximator reads ``K`` only through a :class:`SimilarityOracle`, and
touches ``O(n * s)`` entries: sampled columns, sampled rows, and small
principal or cross blocks between landmarks.

Nystrom-family results are :class:`NystromFactor` objects with
``K ~ Z @ diag(signs) @ Z.T``.  CUR-family results are :class:`CURFactor`
objects with ``K ~ C @ U @ R``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .core import (
    IndexSample,
    NotPSDError,
    NumericError,
    ParameterError,
    SimilarityOracle,
    sample_nested,
    sample_uniform,
)
from .linalg import (
    DEFAULT_RCOND,
    PSD_RTOL,
    inv_sqrt_psd,
    pinv,
    signed_inv_sqrt,
    spectral_norm,
    svd,
    sym_eigvals,
)

__all__ = [
    "NystromFactor",
    "CURFactor",
    "SHIFT_MODES",
    "nystrom_from_sample",
    "classic_nystrom",
    "sms_from_samples",
    "sms_nystrom",
    "skeleton_from_samples",
    "skeleton",
    "sicur",
    "stacur_from_samples",
    "stacur",
    "reconstruct",
    "embed_nystrom",
    "cur_projection",
    "embed_cur",
    "extend_embedding",
]

SHIFT_MODES = ("clamped", "verbatim")
CUR_METHODS = ("skeleton", "sicur", "stacur_shared", "stacur_distinct")


@dataclass(frozen=True, eq=False)
class NystromFactor:
    """``K ~ Z @ diag(signs) @ Z.T`` plus what is needed to extend it.

    ``inner_root`` maps a row of (shifted) landmark similarities to a row of
    ``Z``.  ``shift`` is the diagonal shift ``e`` added at landmark
    positions (0 for classic Nystrom); ``rescale_beta`` is 1 unless the
    shifted inner matrix was rescaled.  ``superset`` and
    ``submatrix_min_eig`` record the larger sample used to pick the shift.
    """

    Z: np.ndarray
    signs: np.ndarray
    landmarks: IndexSample
    inner_root: np.ndarray
    shift: float = 0.0
    alpha: float = 0.0
    rescale_beta: float = 1.0
    method: str = "nystrom"
    superset: Optional[IndexSample] = None
    submatrix_min_eig: Optional[float] = None

    @property
    def n(self) -> int:
        return self.Z.shape[0]

    @property
    def rank(self) -> int:
        return self.Z.shape[1]

    @property
    def is_psd(self) -> bool:
        return bool((self.signs > 0).all())

    def reconstruct(self, rows=None, cols=None) -> np.ndarray:
        r = slice(None) if rows is None else np.asarray(rows, dtype=np.int64)
        c = slice(None) if cols is None else np.asarray(cols, dtype=np.int64)
        Zr, Zc = self.Z[r], self.Z[c]
        # averaging both products makes entry (i, j) bitwise equal to (j, i)
        return 0.5 * ((Zr * self.signs) @ Zc.T + ((Zc * self.signs) @ Zr.T).T)

    def to_dense(self) -> np.ndarray:
        return self.reconstruct()


@dataclass(frozen=True, eq=False)
class CURFactor:
    """``K ~ C @ U @ R`` from sampled columns ``C`` and rows ``R``."""

    C: np.ndarray
    U: np.ndarray
    R: np.ndarray
    col_landmarks: IndexSample
    row_landmarks: IndexSample
    method: str

    def __post_init__(self):
        n, s1 = self.C.shape
        if self.U.shape != (s1, self.R.shape[0]) or self.R.shape[1] != n:
            raise ParameterError(
                f"inconsistent CUR shapes C{self.C.shape} U{self.U.shape} R{self.R.shape}"
            )
        if self.method not in CUR_METHODS:
            raise ParameterError(f"unknown CUR method tag {self.method!r}")

    @property
    def n(self) -> int:
        return self.C.shape[0]

    def reconstruct(self, rows=None, cols=None) -> np.ndarray:
        r = slice(None) if rows is None else np.asarray(rows, dtype=np.int64)
        c = slice(None) if cols is None else np.asarray(cols, dtype=np.int64)
        return (self.C[r] @ self.U) @ self.R[:, c]

    def to_dense(self) -> np.ndarray:
        return self.reconstruct()


Factor = Union[NystromFactor, CURFactor]


# ---------------------------------------------------------------------------
# Nystrom family
# ---------------------------------------------------------------------------


def nystrom_from_sample(oracle: SimilarityOracle, S: IndexSample,
                        rcond: float = DEFAULT_RCOND) -> NystromFactor:
    """Classic Nystrom ``KS (S^T K S)^+ S^T K`` on a given landmark sample."""
    C = oracle.block(None, S)
    inner = C[S.indices]
    W, signs = signed_inv_sqrt(inner, rcond)
    return NystromFactor(Z=C @ W, signs=signs, landmarks=S, inner_root=W)


def classic_nystrom(oracle: SimilarityOracle, s: int, seed: int = 0,
                    rcond: float = DEFAULT_RCOND) -> NystromFactor:
    """Classic Nystrom with ``s`` uniform landmarks.

    Indefinite inner matrices do not raise: the factor keeps the eigenvalue
    signs in ``signs``, so ``Z @ diag(signs) @ Z.T`` still equals
    ``KS (S^T K S)^+ S^T K``.
    """
    S = sample_uniform(oracle.size, s, seed)
    return nystrom_from_sample(oracle, S, rcond)


def _shift_value(outer_eigs: np.ndarray, alpha: float, shift_mode: str) -> float:
    lam = float(outer_eigs[0])
    if shift_mode == "verbatim":
        return -alpha * lam
    scale = float(np.abs(outer_eigs).max())
    if lam < -PSD_RTOL * scale:
        return alpha * -lam
    return 0.0


def sms_from_samples(oracle: SimilarityOracle, S1: IndexSample, S2: IndexSample,
                     alpha: float = 1.5, rcond: float = DEFAULT_RCOND,
                     shift_mode: str = "clamped", rescale: bool = False) -> NystromFactor:
    """Submatrix-shifted Nystrom on given nested samples ``S1 ⊆ S2``.

    The shift is ``e = alpha * max(0, -lambda_min(S2^T K S2))`` in clamped
    mode (zero when that block is numerically PSD) and
    ``e = -alpha * lambda_min(S2^T K S2)`` in verbatim mode.  It is added to
    the landmark entries of ``KS1`` and to the diagonal of ``S1^T K S1``.
    """
    if shift_mode not in SHIFT_MODES:
        raise ParameterError(f"shift_mode must be one of {SHIFT_MODES}, got {shift_mode!r}")
    if alpha < 1:
        raise ParameterError(f"alpha must be >= 1, got {alpha}")
    if not S1.as_set() <= S2.as_set():
        raise ParameterError("S1 must be a subset of S2")
    s1 = len(S1)
    C = oracle.block(None, S1)
    outer_eigs = sym_eigvals(oracle.block(S2, S2))
    e = _shift_value(outer_eigs, alpha, shift_mode)
    raw_inner = C[S1.indices]
    if e != 0.0:
        C[S1.indices, np.arange(s1)] += e
    inner = C[S1.indices]
    beta = 1.0
    if rescale:
        denom = spectral_norm(inner)
        beta = spectral_norm(raw_inner) / denom if denom > 0 else 1.0
        inner = beta * inner
    try:
        W = inv_sqrt_psd(inner, rcond)
    except NotPSDError as exc:
        raise NotPSDError(
            f"SMS-Nystrom in {shift_mode} shift mode (alpha={alpha}, e={e:.6e}) "
            f"left the shifted inner matrix indefinite: lambda_min = {exc.lambda_min:.6e}",
            exc.lambda_min,
        ) from exc
    return NystromFactor(
        Z=C @ W,
        signs=np.ones(W.shape[1]),
        landmarks=S1,
        inner_root=W,
        shift=e,
        alpha=float(alpha),
        rescale_beta=float(beta),
        method="sms-rescaled" if rescale else "sms",
        superset=S2,
        submatrix_min_eig=float(outer_eigs[0]),
    )


def sms_nystrom(oracle: SimilarityOracle, s1: int, s2: Optional[int] = None,
                alpha: float = 1.5, seed: int = 0, rcond: float = DEFAULT_RCOND,
                shift_mode: str = "clamped", rescale: bool = False) -> NystromFactor:
    """SMS-Nystrom with ``s1`` landmarks and an ``s2``-point shift estimate.

    ``s2`` defaults to ``min(2 * s1, n)``.  On PSD input in clamped mode the
    result is bitwise identical to :func:`classic_nystrom` with ``s = s1``
    and the same seed.
    """
    n = oracle.size
    if s2 is None:
        s2 = min(2 * int(s1), n)
    S1, S2 = sample_nested(n, s1, s2, seed)
    return sms_from_samples(oracle, S1, S2, alpha, rcond, shift_mode, rescale)


# ---------------------------------------------------------------------------
# CUR family
# ---------------------------------------------------------------------------


def skeleton_from_samples(oracle: SimilarityOracle, S1: IndexSample, S2: IndexSample,
                          rcond: float = DEFAULT_RCOND,
                          method: str = "skeleton") -> CURFactor:
    C = oracle.block(None, S1)
    R = oracle.block(S2, None)
    U = pinv(R[:, S1.indices], rcond)
    return CURFactor(C, U, R, S1, S2, method)


def skeleton(oracle: SimilarityOracle, s1: int, s2: int, sampling: str = "nested",
             seed: int = 0, rcond: float = DEFAULT_RCOND) -> CURFactor:
    """Skeleton approximation ``KS1 (S2^T K S1)^+ S2^T K``.

    ``sampling="nested"`` draws ``S1 ⊆ S2`` (needs ``s1 <= s2``);
    ``"independent"`` draws the two samples separately.
    """
    n = oracle.size
    if sampling == "nested":
        S1, S2 = sample_nested(n, s1, s2, seed)
    elif sampling == "independent":
        S1 = sample_uniform(n, s1, seed)
        S2 = sample_uniform(n, s2, seed, site="rows")
    else:
        raise ParameterError(f"sampling must be 'nested' or 'independent', got {sampling!r}")
    return skeleton_from_samples(oracle, S1, S2, rcond)


def sicur(oracle: SimilarityOracle, s1: int, seed: int = 0,
          rcond: float = DEFAULT_RCOND) -> CURFactor:
    """Skeleton approximation with nested samples and ``s2 = 2 * s1``."""
    if 2 * int(s1) > oracle.size:
        raise ParameterError(f"SiCUR needs 2*s1 <= n, got s1={s1}, n={oracle.size}")
    S1, S2 = sample_nested(oracle.size, s1, 2 * int(s1), seed)
    return skeleton_from_samples(oracle, S1, S2, rcond, method="sicur")


def stacur_from_samples(oracle: SimilarityOracle, S1: IndexSample, S2: IndexSample,
                        rcond: float = DEFAULT_RCOND) -> CURFactor:
    """CUR with joining matrix ``(n/s) (C^T C)^+ S1^T K S2``."""
    if len(S1) != len(S2):
        raise ParameterError("StaCUR uses equal sample sizes")
    n, s = oracle.size, len(S1)
    C = oracle.block(None, S1)
    R = oracle.block(S2, None)
    cross = oracle.block(S1, S2)
    U = (n / s) * (pinv(C.T @ C, rcond) @ cross)
    shared = np.array_equal(S1.indices, S2.indices)
    return CURFactor(C, U, R, S1, S2, "stacur_shared" if shared else "stacur_distinct")


def stacur(oracle: SimilarityOracle, s: int, variant: str = "shared", seed: int = 0,
           rcond: float = DEFAULT_RCOND) -> CURFactor:
    S1 = sample_uniform(oracle.size, s, seed)
    if variant == "shared":
        S2 = S1
    elif variant == "distinct":
        S2 = sample_uniform(oracle.size, s, seed, site="rows")
    else:
        raise ParameterError(f"variant must be 'shared' or 'distinct', got {variant!r}")
    factor = stacur_from_samples(oracle, S1, S2, rcond)
    if variant == "distinct" and factor.method != "stacur_distinct":
        # both draws coincided (only possible when s == n)
        factor = CURFactor(factor.C, factor.U, factor.R, S1, S2, "stacur_distinct")
    return factor


# ---------------------------------------------------------------------------
# Materialization, embeddings, extension
# ---------------------------------------------------------------------------


def reconstruct(factor, rows=None, cols=None) -> np.ndarray:
    """Entries of the approximation at ``rows x cols`` (``None`` = all)."""
    return factor.reconstruct(rows, cols)


def embed_nystrom(factor: NystromFactor) -> np.ndarray:
    """Rows of ``Z``: point embeddings whose dot products give ``K~``."""
    if not factor.is_psd:
        raise NumericError(
            "factor has negative signs (indefinite inner matrix); plain embeddings "
            "would lose them. Use Z together with factor.signs, or SMS-Nystrom."
        )
    return factor.Z


def cur_projection(factor: CURFactor, rcond: float = DEFAULT_RCOND) -> np.ndarray:
    """``Wl @ diag(sqrt(sigma))`` from the thin SVD of ``U``."""
    Wl, sigma, _ = svd(factor.U, rcond)
    return Wl * np.sqrt(sigma)


def embed_cur(factor: CURFactor, rcond: float = DEFAULT_RCOND) -> np.ndarray:
    return factor.C @ cur_projection(factor, rcond)


def extend_embedding(factor: NystromFactor, new_similarities,
                     point_index: Optional[int] = None) -> np.ndarray:
    """Embed a point from its similarities to the landmarks (landmark order).

    If ``point_index`` names one of the landmarks, the factor's shift is
    added at that landmark's position first, matching how ``Z`` was built.
    """
    if not factor.is_psd:
        raise NumericError("out-of-sample extension needs a factor from the PSD path")
    x = np.array(new_similarities, dtype=np.float64).reshape(-1)
    if x.size != len(factor.landmarks):
        raise ParameterError(
            f"expected {len(factor.landmarks)} landmark similarities, got {x.size}"
        )
    if point_index is not None and factor.shift != 0.0:
        k = factor.landmarks.position(point_index)
        if k is not None:
            x[k] += factor.shift
    return x @ factor.inner_root
