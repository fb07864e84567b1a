"""Similarity oracles, landmark samples and the error types shared by the package.

An oracle is the only route to the similarity matrix ``K``: every entry an
approximator needs is requested through :meth:`SimilarityOracle.pairs` or
:meth:`SimilarityOracle.block`.  Wrapping an oracle in :class:`CountingOracle`
memoizes those requests and counts how many distinct pairs actually reached
the underlying similarity function.

Random draws use numpy's PCG64.  Each logical draw site (``"landmarks"``,
``"superset"``, ``"rows"``, ...) gets its own stream, seeded from
``SeedSequence([seed, crc32(site)])``, so adding a draw in one place never
shifts the numbers drawn in another.
"""

from __future__ import annotations

import threading
import zlib
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

__all__ = [
    "SimApproxError",
    "ParameterError",
    "PreconditionError",
    "NumericError",
    "NotPSDError",
    "OracleValueError",
    "MatrixFormatError",
    "make_rng",
    "IndexSample",
    "sample_uniform",
    "sample_nested",
    "SimilarityOracle",
    "FunctionOracle",
    "DenseOracle",
    "SymmetrizedOracle",
    "CountingOracle",
    "symmetrize_oracle",
    "counting_oracle",
    "gather_block",
]


class SimApproxError(Exception):
    """Base class for errors raised by this package."""


class ParameterError(SimApproxError, ValueError):
    """Invalid sizes, seeds, fractions or other user parameters."""


class PreconditionError(SimApproxError, ValueError):
    """An input matrix violates a documented precondition (e.g. symmetry)."""


class NumericError(SimApproxError, ArithmeticError):
    """A numerical routine failed or produced an unusable result."""


class NotPSDError(NumericError):
    """A matrix required to be PSD has a significantly negative eigenvalue."""

    def __init__(self, message: str, lambda_min: float):
        super().__init__(message)
        self.lambda_min = lambda_min


class OracleValueError(NumericError):
    """The similarity function returned NaN or infinity."""


class MatrixFormatError(SimApproxError, OSError):
    """A stored matrix file is malformed or unreadable."""


def make_rng(seed: int, site: str) -> np.random.Generator:
    """Return the PCG64 stream for draw site ``site`` under ``seed``."""
    seed = int(seed)
    if seed < 0:
        raise ParameterError(f"seed must be non-negative, got {seed}")
    key = zlib.crc32(site.encode("utf-8"))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, key])))


# ---------------------------------------------------------------------------
# Landmark samples
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class IndexSample:
    """Ordered set of distinct landmark indices in ``[0, n)``.

    The order is the draw order and every factor built from the sample uses
    it.  ``parent`` optionally points at a superset sample.
    """

    indices: np.ndarray
    n: int
    parent: Optional["IndexSample"] = None
    _positions: dict = field(default=None, init=False, repr=False)

    def __post_init__(self):
        idx = np.array(self.indices, dtype=np.int64).reshape(-1)
        if idx.size and (idx.min() < 0 or idx.max() >= self.n):
            raise ParameterError(f"sample indices must lie in [0, {self.n})")
        if np.unique(idx).size != idx.size:
            raise ParameterError("sample indices must be distinct")
        idx.setflags(write=False)
        object.__setattr__(self, "indices", idx)
        if self.parent is not None:
            if self.parent.n != self.n:
                raise ParameterError("parent sample has a different universe size")
            if not np.isin(idx, self.parent.indices).all():
                raise ParameterError("sample is not contained in its parent")
        object.__setattr__(
            self, "_positions", {int(v): k for k, v in enumerate(idx)}
        )

    def __len__(self) -> int:
        return int(self.indices.size)

    def __iter__(self):
        return iter(self.indices.tolist())

    def __contains__(self, i) -> bool:
        return int(i) in self._positions

    def position(self, i: int) -> Optional[int]:
        """Position of dataset index ``i`` within the sample, or None."""
        return self._positions.get(int(i))

    def as_set(self) -> frozenset:
        return frozenset(self._positions)


def _check_size(n: int, s: int, name: str = "s"):
    if n < 1:
        raise ParameterError(f"n must be positive, got {n}")
    if not 1 <= s <= n:
        raise ParameterError(f"{name} must satisfy 1 <= {name} <= n={n}, got {s}")


def sample_uniform(n: int, s: int, seed: int, site: str = "landmarks") -> IndexSample:
    """Draw ``s`` of ``n`` indices uniformly without replacement."""
    n, s = int(n), int(s)
    _check_size(n, s)
    rng = make_rng(seed, site)
    return IndexSample(rng.choice(n, size=s, replace=False), n)


def sample_nested(n: int, s1: int, s2: int, seed: int) -> tuple[IndexSample, IndexSample]:
    """Draw nested samples ``S1 ⊆ S2`` with ``|S1| = s1`` and ``|S2| = s2``.

    ``S1`` is the same draw :func:`sample_uniform` makes for ``(n, s1, seed)``;
    ``S2`` extends it with ``s2 - s1`` indices drawn uniformly from the rest.
    The joint law matches drawing ``S2`` first and ``S1`` inside it, and a
    nested run shares its landmarks with a single-sample run of the same seed.
    """
    n, s1, s2 = int(n), int(s1), int(s2)
    _check_size(n, s1, "s1")
    _check_size(n, s2, "s2")
    if s1 > s2:
        raise ParameterError(f"nested sampling needs s1 <= s2, got s1={s1}, s2={s2}")
    inner = sample_uniform(n, s1, seed)
    rest = np.setdiff1d(np.arange(n), inner.indices, assume_unique=True)
    extra = make_rng(seed, "superset").choice(rest, size=s2 - s1, replace=False)
    outer = IndexSample(np.concatenate([inner.indices, extra]), n)
    return IndexSample(inner.indices, n, parent=outer), outer


# ---------------------------------------------------------------------------
# Oracles
# ---------------------------------------------------------------------------

IndexLike = Union[IndexSample, Sequence[int], np.ndarray, None]


def _as_index_array(idx: IndexLike, n: int) -> np.ndarray:
    if idx is None:
        return np.arange(n)
    if isinstance(idx, IndexSample):
        return idx.indices
    return np.asarray(idx, dtype=np.int64).reshape(-1)


class SimilarityOracle:
    """Access path to an ``n x n`` similarity matrix.

    Subclasses implement :meth:`_values`, a vectorized map from index arrays
    to similarity values.  Range and finiteness checks happen here, so every
    oracle refuses out-of-range pairs and never lets NaN/Inf through.
    """

    def __init__(self, size: int, symmetric_hint: bool):
        size = int(size)
        if size < 1:
            raise ParameterError(f"oracle size must be positive, got {size}")
        self.size = size
        self.symmetric_hint = bool(symmetric_hint)

    def _values(self, i: np.ndarray, j: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def pairs(self, i, j) -> np.ndarray:
        """Similarities for the index pairs ``zip(i, j)``."""
        i = np.asarray(i, dtype=np.int64)
        j = np.asarray(j, dtype=np.int64)
        i, j = np.broadcast_arrays(i, j)
        if i.size == 0:
            return np.zeros(i.shape)
        n = self.size
        if min(i.min(), j.min()) < 0 or max(i.max(), j.max()) >= n:
            raise ParameterError(f"oracle index out of range [0, {n})")
        out = np.asarray(self._values(i.ravel(), j.ravel()), dtype=np.float64)
        if not np.isfinite(out).all():
            bad = int(np.flatnonzero(~np.isfinite(out))[0])
            raise OracleValueError(
                f"similarity at ({i.ravel()[bad]}, {j.ravel()[bad]}) is not finite"
            )
        return out.reshape(i.shape)

    def evaluate(self, i: int, j: int) -> float:
        return float(self.pairs(np.array([i]), np.array([j]))[0])

    __call__ = evaluate

    def block(self, rows: IndexLike = None, cols: IndexLike = None) -> np.ndarray:
        """Dense ``|rows| x |cols|`` block; ``None`` means the full range."""
        r = _as_index_array(rows, self.size)
        c = _as_index_array(cols, self.size)
        ii, jj = np.meshgrid(r, c, indexing="ij")
        return self.pairs(ii, jj)

    def dense(self) -> np.ndarray:
        """Materialize all of ``K``. Costs ``n^2`` evaluations."""
        return self.block(None, None)


class FunctionOracle(SimilarityOracle):
    """Oracle backed by a user similarity function ``func(i, j) -> float``.

    With ``vectorized=True`` the function receives whole index arrays.
    """

    def __init__(self, size: int, func: Callable, symmetric_hint: bool = True,
                 vectorized: bool = False):
        super().__init__(size, symmetric_hint)
        self.func = func
        self.vectorized = vectorized

    def _values(self, i, j):
        if self.vectorized:
            return self.func(i, j)
        return np.fromiter((self.func(int(a), int(b)) for a, b in zip(i, j)),
                           dtype=np.float64, count=i.size)


class DenseOracle(SimilarityOracle):
    """Oracle serving entries of an in-memory square matrix.

    ``symmetric_hint=None`` scans the matrix: it is symmetric when
    ``max|K - K^T| <= 1e-8 * max|K|``.
    """

    def __init__(self, matrix, symmetric_hint: Optional[bool] = None):
        K = np.array(matrix, dtype=np.float64)
        if K.ndim != 2 or K.shape[0] != K.shape[1]:
            raise ParameterError(f"similarity matrix must be square, got shape {K.shape}")
        if not np.isfinite(K).all():
            raise OracleValueError("similarity matrix has non-finite entries")
        if symmetric_hint is None:
            symmetric_hint = is_symmetric(K)
        K.setflags(write=False)
        super().__init__(K.shape[0], symmetric_hint)
        self.matrix = K

    def _values(self, i, j):
        return self.matrix[i, j]

    def block(self, rows: IndexLike = None, cols: IndexLike = None) -> np.ndarray:
        r = _as_index_array(rows, self.size)
        c = _as_index_array(cols, self.size)
        if r.size and (r.min() < 0 or r.max() >= self.size):
            raise ParameterError(f"oracle index out of range [0, {self.size})")
        if c.size and (c.min() < 0 or c.max() >= self.size):
            raise ParameterError(f"oracle index out of range [0, {self.size})")
        return self.matrix[np.ix_(r, c)]

    def dense(self) -> np.ndarray:
        return self.matrix.copy()


def is_symmetric(K: np.ndarray, rtol: float = 1e-8) -> bool:
    scale = np.abs(K).max() if K.size else 0.0
    return bool(np.abs(K - K.T).max(initial=0.0) <= rtol * scale)


class SymmetrizedOracle(SimilarityOracle):
    """Evaluates ``(inner(i, j) + inner(j, i)) / 2``."""

    def __init__(self, inner: SimilarityOracle):
        super().__init__(inner.size, True)
        self.inner = inner

    def _values(self, i, j):
        vals = self.inner.pairs(i, j)
        off = i != j
        if off.any():
            vals[off] = 0.5 * (vals[off] + self.inner.pairs(j[off], i[off]))
        return vals


class CountingOracle(SimilarityOracle):
    """Memoizing wrapper that counts distinct pairs sent to ``inner``.

    Pairs are keyed unordered when ``inner.symmetric_hint`` is true and
    ordered otherwise.  The cache is guarded by a lock; inner evaluation
    happens under it so a pair is never computed twice.
    """

    def __init__(self, inner: SimilarityOracle):
        super().__init__(inner.size, inner.symmetric_hint)
        self.inner = inner
        self._keys = np.empty(0, dtype=np.int64)
        self._vals = np.empty(0, dtype=np.float64)
        self._lock = threading.Lock()

    @property
    def calls(self) -> int:
        """Number of distinct pairs evaluated on the inner oracle."""
        return int(self._keys.size)

    def _canonical(self, i, j):
        if self.symmetric_hint:
            i, j = np.minimum(i, j), np.maximum(i, j)
        return i * self.size + j

    def _values(self, i, j):
        keys = self._canonical(i, j)
        uniq, inverse = np.unique(keys, return_inverse=True)
        with self._lock:
            vals = np.empty(uniq.size)
            found = np.zeros(uniq.size, dtype=bool)
            if self._keys.size:
                pos = np.minimum(np.searchsorted(self._keys, uniq), self._keys.size - 1)
                found = self._keys[pos] == uniq
                vals[found] = self._vals[pos[found]]
            missing = uniq[~found]
            if missing.size:
                mv = self.inner.pairs(missing // self.size, missing % self.size)
                vals[~found] = mv
                keys_all = np.concatenate([self._keys, missing])
                vals_all = np.concatenate([self._vals, mv])
                order = np.argsort(keys_all, kind="stable")
                self._keys = keys_all[order]
                self._vals = vals_all[order]
        return vals[inverse.reshape(-1)]


def symmetrize_oracle(inner: SimilarityOracle) -> SymmetrizedOracle:
    return SymmetrizedOracle(inner)


def counting_oracle(inner: SimilarityOracle) -> CountingOracle:
    return CountingOracle(inner)


def gather_block(oracle: SimilarityOracle, rows: IndexLike, cols: IndexLike) -> np.ndarray:
    """Dense block of oracle values, in the order of ``rows`` and ``cols``."""
    return oracle.block(rows, cols)
