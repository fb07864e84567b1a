"""Synthetic and stored similarity oracles.

All generators are deterministic in their parameters and seed.  Dense
generators hold the whole matrix in memory, which is fine up to a few
thousand points.
"""

from __future__ import annotations

import re
from typing import Sequence

import numpy as np

from .core import DenseOracle, ParameterError, SimilarityOracle, make_rng
from .matrix_io import read_matrix

__all__ = [
    "FLAT_NEAR_PSD_PROFILE",
    "TOP_HEAVY_NEAR_PSD_PROFILE",
    "random_orthogonal",
    "random_psd",
    "low_rank_psd",
    "low_rank_indefinite",
    "planted_spectrum",
    "parse_profile",
    "profile_eigenvalues",
    "planted_profile",
    "ExpDistanceOracle",
    "exp_distance_oracle",
    "stored_matrix_oracle",
    "AsymmetricNoiseOracle",
    "asymmetric_noise",
]

# 90% of the spectrum in [0.5, 1], 10% in [-0.1, -0.001], for n = 1000
FLAT_NEAR_PSD_PROFILE = "900:0.5..1,100:-0.1..-0.001"
# a few dominant eigenvalues over a small tail with 10% negatives, for n = 1000;
# sampled principal submatrices get eigenvalues near zero
TOP_HEAVY_NEAR_PSD_PROFILE = (
    "1:50..50,1:20..20,1:10..10,1:5..5,1:2..2,895:0.001..0.05,100:-0.1..-0.001"
)


def random_orthogonal(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed orthogonal matrix: QR of a Gaussian, R-diagonal signs fixed."""
    Q, R = np.linalg.qr(rng.standard_normal((n, n)))
    d = np.sign(np.diag(R))
    d[d == 0] = 1.0
    return Q * d


def _symmetric(K: np.ndarray) -> np.ndarray:
    return 0.5 * (K + K.T)


def random_psd(n: int, seed: int) -> DenseOracle:
    """``G @ G.T`` with ``G`` an ``n x n`` standard normal matrix."""
    if n < 1:
        raise ParameterError(f"n must be positive, got {n}")
    G = make_rng(seed, "psd").standard_normal((n, n))
    return DenseOracle(_symmetric(G @ G.T), symmetric_hint=True)


def low_rank_psd(n: int, rank: int, seed: int) -> DenseOracle:
    """``G @ G.T`` with ``G`` an ``n x rank`` standard normal matrix."""
    G = make_rng(seed, "low-rank").standard_normal((n, rank))
    return DenseOracle(_symmetric(G @ G.T), symmetric_hint=True)


def low_rank_indefinite(n: int, signs: Sequence[float], seed: int) -> DenseOracle:
    """``A @ diag(signs) @ A.T`` with ``A`` an ``n x len(signs)`` standard normal matrix."""
    signs = np.asarray(signs, dtype=np.float64)
    A = make_rng(seed, "low-rank").standard_normal((n, signs.size))
    return DenseOracle(_symmetric((A * signs) @ A.T), symmetric_hint=True)


def planted_spectrum(n: int, eigenvalues, seed: int) -> DenseOracle:
    """``Q @ diag(eigenvalues) @ Q.T`` with a seeded Haar-random ``Q``."""
    lam = np.asarray(eigenvalues, dtype=np.float64).reshape(-1)
    if n < 1 or lam.size != n:
        raise ParameterError(f"need n >= 1 eigenvalues matching n={n}, got {lam.size}")
    Q = random_orthogonal(n, make_rng(seed, "basis"))
    return DenseOracle(_symmetric((Q * lam) @ Q.T), symmetric_hint=True)


_SEGMENT = re.compile(r"^\s*(\d+)\s*:\s*([-+0-9.eE]+)\s*\.\.\s*([-+0-9.eE]+)\s*$")


def parse_profile(text: str) -> list[tuple[int, float, float]]:
    """Parse ``"count:lo..hi,count:lo..hi,..."`` into segments."""
    segments = []
    for part in text.split(","):
        m = _SEGMENT.match(part)
        if not m:
            raise ParameterError(f"bad profile segment {part!r}; expected count:lo..hi")
        count, lo, hi = int(m.group(1)), float(m.group(2)), float(m.group(3))
        if lo > hi:
            lo, hi = hi, lo
        segments.append((count, lo, hi))
    if not segments:
        raise ParameterError("empty spectrum profile")
    return segments


def profile_eigenvalues(profile, seed: int) -> np.ndarray:
    """Draw eigenvalues uniformly within each profile segment, segment by segment."""
    segments = parse_profile(profile) if isinstance(profile, str) else list(profile)
    rng = make_rng(seed, "profile")
    return np.concatenate([rng.uniform(lo, hi, count) for count, lo, hi in segments])


def planted_profile(n: int, profile, seed: int) -> DenseOracle:
    lam = profile_eigenvalues(profile, seed)
    if lam.size != n:
        raise ParameterError(f"profile counts sum to {lam.size}, expected n={n}")
    return planted_spectrum(n, lam, seed)


class ExpDistanceOracle(SimilarityOracle):
    """``exp(-gamma * ||p_i - p_j||_2)`` over a point cloud."""

    def __init__(self, points, gamma: float):
        P = np.asarray(points, dtype=np.float64)
        if P.ndim != 2:
            raise ParameterError("points must be an n x d array")
        if not gamma > 0:
            raise ParameterError(f"gamma must be positive, got {gamma}")
        super().__init__(P.shape[0], True)
        self.points = P
        self.gamma = float(gamma)

    def _values(self, i, j):
        d = np.sqrt(((self.points[i] - self.points[j]) ** 2).sum(axis=1))
        return np.exp(-self.gamma * d)


def exp_distance_oracle(points, gamma: float) -> ExpDistanceOracle:
    return ExpDistanceOracle(points, gamma)


def stored_matrix_oracle(path, fmt: str | None = None) -> DenseOracle:
    """Oracle over a matrix file; symmetry is detected with tolerance ``1e-8 * max|K|``."""
    return DenseOracle(read_matrix(path, fmt))


def _splitmix64(x: np.ndarray) -> np.ndarray:
    z = x + np.uint64(0x9E3779B97F4A7C15)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


class AsymmetricNoiseOracle(SimilarityOracle):
    """Adds ``uniform(-epsilon, epsilon)`` noise, independently per ordered pair.

    The noise at ``(i, j)`` is a splitmix64 hash of ``(seed, i, j)``, so it
    does not depend on query order or batching.
    """

    def __init__(self, inner: SimilarityOracle, epsilon: float, seed: int):
        if epsilon < 0:
            raise ParameterError(f"epsilon must be >= 0, got {epsilon}")
        if seed < 0:
            raise ParameterError(f"seed must be non-negative, got {seed}")
        super().__init__(inner.size, inner.symmetric_hint and epsilon == 0)
        self.inner = inner
        self.epsilon = float(epsilon)
        self._key = _splitmix64(np.array([seed], dtype=np.uint64))[0]

    def noise(self, i, j) -> np.ndarray:
        flat = np.asarray(i, dtype=np.uint64) * np.uint64(self.size) + np.asarray(j, dtype=np.uint64)
        h = _splitmix64(_splitmix64(flat) ^ self._key)
        u = (h >> np.uint64(11)).astype(np.float64) * 2.0 ** -53
        return self.epsilon * (2.0 * u - 1.0)

    def _values(self, i, j):
        vals = self.inner.pairs(i, j)
        if self.epsilon == 0:
            return vals
        return vals + self.noise(i, j)


def asymmetric_noise(inner: SimilarityOracle, epsilon: float, seed: int) -> AsymmetricNoiseOracle:
    return AsymmetricNoiseOracle(inner, epsilon, seed)
