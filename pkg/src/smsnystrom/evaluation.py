"""Error metrics, sample-size sweeps and spectrum diagnostics.

These helpers need the dense matrix, so they are for desk-scale evaluation
of the sublinear methods, not for production use.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import algorithms as alg
from .core import (
    CountingOracle,
    DenseOracle,
    ParameterError,
    SimilarityOracle,
    sample_uniform,
    symmetrize_oracle,
)
from .linalg import DEFAULT_RCOND, magnitude_order, optimal_rank_k, sym_eigvals

__all__ = [
    "METHODS",
    "ErrorReport",
    "SweepRow",
    "EigenHistogram",
    "rel_fro_error",
    "run_method",
    "evaluate_method",
    "sample_sizes",
    "error_sweep",
    "summarize",
    "eigen_histogram",
    "spectrum_profile",
    "negativity_summary",
]

METHODS = (
    "nystrom",
    "sms",
    "sms-verbatim",
    "sms-rescaled",
    "skeleton",
    "skeleton-nested",
    "sicur",
    "stacur-s",
    "stacur-d",
    "optimal",
)
NYSTROM_METHODS = ("nystrom", "sms", "sms-verbatim", "sms-rescaled")


@dataclass(frozen=True)
class ErrorReport:
    method: str
    s1: int
    s2: int
    seed: int
    rel_fro_error: float
    oracle_calls: int
    wall_time: float
    alpha: Optional[float] = None
    fraction: Optional[float] = None
    trial: int = 0


@dataclass(frozen=True)
class SweepRow:
    method: str
    fraction: float
    s1: int
    s2: int
    mean_err: float
    std_err: float
    mean_calls: float
    trials: int


@dataclass(frozen=True)
class EigenHistogram:
    trial: np.ndarray  # trial id of each pooled eigenvalue
    eigenvalues: np.ndarray  # ascending within each trial
    counts: np.ndarray
    edges: np.ndarray


def _dense(approx) -> np.ndarray:
    if isinstance(approx, np.ndarray):
        return approx
    return approx.to_dense()


def rel_fro_error(K, approx) -> float:
    """``||K - K~||_F / ||K||_F`` for a factor, a rank-k approximation or an array."""
    K = np.asarray(K, dtype=np.float64)
    denom = np.linalg.norm(K)
    if denom == 0:
        raise ParameterError("relative error is undefined for a zero matrix")
    return float(np.linalg.norm(K - _dense(approx)) / denom)


def run_method(oracle: SimilarityOracle, method: str, s1: int, s2: Optional[int] = None,
               alpha: float = 1.5, seed: int = 0, rcond: float = DEFAULT_RCOND,
               sampling: Optional[str] = None):
    """Dispatch a method by name.  Returns a factor or a :class:`RankKApprox`.

    ``s2`` is ignored by methods with a fixed second sample size
    (nystrom, sicur, stacur-*, optimal).
    """
    if method == "nystrom":
        return alg.classic_nystrom(oracle, s1, seed, rcond)
    if method in ("sms", "sms-verbatim", "sms-rescaled"):
        return alg.sms_nystrom(
            oracle, s1, s2, alpha, seed, rcond,
            shift_mode="verbatim" if method == "sms-verbatim" else "clamped",
            rescale=method == "sms-rescaled",
        )
    if method in ("skeleton", "skeleton-nested"):
        if sampling is None:
            sampling = "nested" if method == "skeleton-nested" else "independent"
        return alg.skeleton(oracle, s1, s1 if s2 is None else s2, sampling, seed, rcond)
    if method == "sicur":
        return alg.sicur(oracle, s1, seed, rcond)
    if method == "stacur-s":
        return alg.stacur(oracle, s1, "shared", seed, rcond)
    if method == "stacur-d":
        return alg.stacur(oracle, s1, "distinct", seed, rcond)
    if method == "optimal":
        return optimal_rank_k(oracle.dense(), s1)
    raise ParameterError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")


def _resolved_s2(method: str, approx, s1: int) -> int:
    if isinstance(approx, alg.NystromFactor):
        return len(approx.superset) if approx.superset is not None else s1
    if isinstance(approx, alg.CURFactor):
        return len(approx.row_landmarks)
    return s1


def evaluate_method(oracle: SimilarityOracle, method: str, s1: int, s2: Optional[int] = None,
                    alpha: float = 1.5, seed: int = 0, rcond: float = DEFAULT_RCOND,
                    K: Optional[np.ndarray] = None, fraction: Optional[float] = None,
                    trial: int = 0, sampling: Optional[str] = None):
    """Run one method through a counting oracle and measure it against ``K``.

    Asymmetric sources are symmetrized first and the error is measured
    against the symmetrized matrix.  Returns ``(approx, ErrorReport)``.
    """
    if not oracle.symmetric_hint:
        oracle = symmetrize_oracle(oracle)
        K = None
    if K is None:
        K = oracle.dense()
    counter = CountingOracle(oracle)
    t0 = time.perf_counter()
    approx = run_method(counter, method, s1, s2, alpha, seed, rcond, sampling)
    elapsed = time.perf_counter() - t0
    report = ErrorReport(
        method=method,
        s1=int(s1),
        s2=_resolved_s2(method, approx, int(s1)),
        seed=int(seed),
        rel_fro_error=rel_fro_error(K, approx),
        oracle_calls=counter.calls,
        wall_time=elapsed,
        alpha=float(alpha) if method in NYSTROM_METHODS and method != "nystrom" else None,
        fraction=fraction,
        trial=trial,
    )
    return approx, report


def sample_sizes(method: str, fraction: float, n: int) -> tuple[int, int]:
    """``(s1, s2)`` for a sweep point.

    The fraction sets ``s = round(fraction * n)``.  For SiCUR it sets ``s2``
    and ``s1 = s2 // 2``; for SMS variants ``s1 = s`` and
    ``s2 = min(2 * s, n)``; everything else uses ``s1 = s2 = s``.
    """
    if not 0 < fraction <= 1:
        raise ParameterError(f"fraction must lie in (0, 1], got {fraction}")
    s = int(round(fraction * n))
    if method == "sicur":
        s1, s2 = s // 2, 2 * (s // 2)
    elif method in ("sms", "sms-verbatim", "sms-rescaled"):
        s1, s2 = s, min(2 * s, n)
    else:
        s1, s2 = s, s
    if s1 < 1:
        raise ParameterError(f"fraction {fraction} gives an empty sample for {method} (n={n})")
    return s1, s2


def error_sweep(oracle: SimilarityOracle, methods: Sequence[str], fractions: Sequence[float],
                trials: int = 10, base_seed: int = 0, alpha: float = 1.5,
                rcond: float = DEFAULT_RCOND, threads: Optional[int] = None) -> list[ErrorReport]:
    """Run every (method, fraction) pair for ``trials`` seeds ``base_seed + t``.

    Trials may run on a thread pool; the returned reports are sorted by
    (method position, fraction, trial) regardless of completion order.
    """
    if trials < 1:
        raise ParameterError("trials must be >= 1")
    for m in methods:
        if m not in METHODS:
            raise ParameterError(f"unknown method {m!r}; choose from {', '.join(METHODS)}")
    if not oracle.symmetric_hint:
        oracle = symmetrize_oracle(oracle)
    K = oracle.matrix if isinstance(oracle, DenseOracle) else oracle.dense()
    n = oracle.size
    jobs = []
    for mi, m in enumerate(methods):
        for f in fractions:
            s1, s2 = sample_sizes(m, f, n)
            for t in range(trials):
                jobs.append((mi, m, float(f), s1, s2, t))

    def work(job):
        mi, m, f, s1, s2, t = job
        _, rep = evaluate_method(oracle, m, s1, s2, alpha, base_seed + t, rcond, K=K,
                                 fraction=f, trial=t)
        return (mi, f, t), rep

    if threads is not None and threads <= 1:
        results = [work(j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, jobs))
    results.sort(key=lambda kv: kv[0])
    return [rep for _, rep in results]


def summarize(reports: Sequence[ErrorReport]) -> list[SweepRow]:
    """Mean and sample standard deviation of the error per (method, fraction)."""
    groups: dict = {}
    for r in reports:
        groups.setdefault((r.method, r.fraction), []).append(r)
    rows = []
    for (method, fraction), reps in groups.items():
        errs = np.array([r.rel_fro_error for r in reps])
        rows.append(SweepRow(
            method=method,
            fraction=fraction,
            s1=reps[0].s1,
            s2=reps[0].s2,
            mean_err=float(errs.mean()),
            std_err=float(errs.std(ddof=1)) if errs.size > 1 else math.nan,
            mean_calls=float(np.mean([r.oracle_calls for r in reps])),
            trials=len(reps),
        ))
    return rows


def eigen_histogram(oracle: SimilarityOracle, sample_size: int, trials: int, seed: int,
                    bins: int = 50) -> EigenHistogram:
    """Pool the eigenvalues of ``trials`` independently sampled ``S^T K S`` blocks."""
    n = oracle.size
    if not 1 <= sample_size <= n:
        raise ParameterError(f"sample_size must lie in [1, {n}], got {sample_size}")
    if trials < 1 or bins < 1:
        raise ParameterError("trials and bins must be >= 1")
    trial_ids, vals = [], []
    for t in range(trials):
        S = sample_uniform(n, sample_size, seed + t)
        vals.append(sym_eigvals(oracle.block(S, S)))
        trial_ids.append(np.full(sample_size, t))
    pooled = np.concatenate(vals)
    counts, edges = np.histogram(pooled, bins=bins)
    return EigenHistogram(np.concatenate(trial_ids), pooled, counts, edges)


def spectrum_profile(K, from_rank: int = 1, to_rank: Optional[int] = None) -> np.ndarray:
    """Signed eigenvalues by descending magnitude, ranks ``from_rank..to_rank`` (1-based)."""
    w = sym_eigvals(K)
    n = w.size
    if to_rank is None:
        to_rank = n
    if not 1 <= from_rank <= to_rank <= n:
        raise ParameterError(f"need 1 <= from_rank <= to_rank <= {n}, got {from_rank}..{to_rank}")
    return w[magnitude_order(w)][from_rank - 1:to_rank]


def negativity_summary(K, tol: float = 1e-10) -> tuple[int, float]:
    """Count of negative eigenvalues and their share of the total absolute spectrum.

    Eigenvalues above ``-tol * max|lambda|`` count as zero, so round-off on a
    PSD matrix does not register as negativity.
    """
    w = sym_eigvals(K)
    total = np.abs(w).sum()
    if total == 0:
        return 0, 0.0
    neg = w < -tol * np.abs(w).max()
    return int(neg.sum()), float(np.abs(w[neg]).sum() / total)
