import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smsnystrom.core import (
    NotPSDError,
    PreconditionError,
    ParameterError,
    sample_nested,
)
from smsnystrom.generators import low_rank_indefinite, random_psd
from smsnystrom.linalg import (
    inv_sqrt_psd,
    magnitude_order,
    min_eigenvalue,
    optimal_rank_k,
    pinv,
    signed_inv_sqrt,
    spectral_norm,
    svd,
    sym_eig,
)


def rand_sym(m, seed):
    A = np.random.default_rng(seed).standard_normal((m, m))
    return A + A.T


def rand_psd(m, seed):
    G = np.random.default_rng(seed).standard_normal((m, m))
    return G @ G.T


class TestSymEig:
    def test_diag(self):
        np.testing.assert_allclose(sym_eig(np.diag([3.0, 1.0, 2.0])).values, [1, 2, 3])

    def test_swap(self):
        np.testing.assert_allclose(sym_eig([[0.0, 1.0], [1.0, 0.0]]).values, [-1, 1])

    def test_reconstruction_residual(self):
        A = rand_sym(20, 0)
        d = sym_eig(A)
        R = (d.vectors * d.values) @ d.vectors.T
        assert np.linalg.norm(R - A) <= 1e-10 * 20 * np.linalg.norm(A)
        np.testing.assert_allclose(d.vectors.T @ d.vectors, np.eye(20), atol=1e-12)

    def test_rejects_asymmetric(self):
        with pytest.raises(PreconditionError):
            sym_eig([[1.0, 2.0], [0.0, 1.0]])

    def test_rejects_empty(self):
        with pytest.raises(PreconditionError):
            sym_eig(np.zeros((0, 0)))


class TestMinEigenvalue:
    def test_small(self):
        assert min_eigenvalue(np.diag([2.0, 3.0])) == pytest.approx(2.0)
        assert min_eigenvalue([[0.0, 1.0], [1.0, 0.0]]) == pytest.approx(-1.0)

    def test_matches_full_spectrum(self):
        A = rand_sym(10, 1)
        assert min_eigenvalue(A) == pytest.approx(np.linalg.eigvalsh(A).min(), abs=1e-12)


def test_magnitude_order_tie_break():
    vals = np.array([1.0, -3.0, 3.0, -1.0, 2.0])
    np.testing.assert_array_equal(magnitude_order(vals), [2, 1, 4, 0, 3])


class TestPinv:
    def test_diag_with_zero(self):
        np.testing.assert_allclose(pinv(np.diag([2.0, 0.0])), np.diag([0.5, 0.0]))

    def test_invertible(self):
        A = np.random.default_rng(2).standard_normal((3, 3)) + 3 * np.eye(3)
        np.testing.assert_allclose(pinv(A), np.linalg.inv(A), rtol=0, atol=1e-10)

    def test_rank_one(self):
        u = np.array([1.0, 2.0, 3.0])
        v = np.array([0.5, -1.0])
        expected = np.outer(v, u) / (u @ u * (v @ v))
        np.testing.assert_allclose(pinv(np.outer(u, v)), expected, atol=1e-14)

    def test_zero_matrix(self):
        np.testing.assert_array_equal(pinv(np.zeros((2, 3))), np.zeros((3, 2)))

    def test_rejects_bad_rcond(self):
        with pytest.raises(ParameterError):
            pinv(np.eye(2), rcond=0)

    @settings(max_examples=40, deadline=None)
    @given(p=st.integers(1, 8), q=st.integers(1, 8), r=st.integers(1, 8),
           seed=st.integers(0, 10**6))
    def test_penrose_identities(self, p, q, r, seed):
        rng = np.random.default_rng(seed)
        A = rng.standard_normal((p, r)) @ rng.standard_normal((r, q))
        X = pinv(A)
        scale = max(1.0, np.abs(A).max() * np.abs(X).max())
        tol = 1e-8 * scale
        assert np.abs(A @ X @ A - A).max() <= tol * np.abs(A).max()
        assert np.abs(X @ A @ X - X).max() <= tol * np.abs(X).max()
        assert np.abs((A @ X).T - A @ X).max() <= tol
        assert np.abs((X @ A).T - X @ A).max() <= tol


class TestInvSqrt:
    def test_identity(self):
        np.testing.assert_allclose(inv_sqrt_psd(np.eye(3)), np.eye(3), atol=1e-15)

    def test_diag(self):
        np.testing.assert_allclose(inv_sqrt_psd(np.diag([4.0, 9.0])), np.diag([0.5, 1 / 3]),
                                   atol=1e-15)

    def test_random_psd_whitens(self):
        A = rand_psd(8, 3)
        B = inv_sqrt_psd(A)
        np.testing.assert_allclose(B, B.T, atol=0)
        np.testing.assert_allclose(B @ A @ B, np.eye(8), atol=1e-8)

    def test_singular_projects(self):
        G = np.random.default_rng(4).standard_normal((6, 2))
        A = G @ G.T
        B = inv_sqrt_psd(A)
        P = B @ A @ B
        np.testing.assert_allclose(P @ P, P, atol=1e-8)
        assert np.trace(P) == pytest.approx(2.0, abs=1e-8)

    def test_indefinite_raises_with_lambda_min(self):
        with pytest.raises(NotPSDError) as info:
            inv_sqrt_psd(np.diag([1.0, -0.5]))
        assert info.value.lambda_min == pytest.approx(-0.5)
        assert "lambda_min" in str(info.value)

    def test_tiny_negative_tolerated(self):
        B = inv_sqrt_psd(np.diag([1.0, -1e-12]))
        np.testing.assert_allclose(B, np.diag([1.0, 0.0]))


class TestSignedInvSqrt:
    def test_diag_mixed(self):
        W, signs = signed_inv_sqrt(np.diag([4.0, -1.0]))
        np.testing.assert_allclose(W, np.diag([0.5, 1.0]), atol=1e-15)
        np.testing.assert_array_equal(signs, [1.0, -1.0])

    def test_psd_matches_inv_sqrt(self):
        A = rand_psd(6, 5)
        W, signs = signed_inv_sqrt(A)
        np.testing.assert_array_equal(signs, np.ones(6))
        np.testing.assert_array_equal(W, inv_sqrt_psd(A))

    def test_negative_definite(self):
        A = -rand_psd(5, 6)
        W, signs = signed_inv_sqrt(A)
        np.testing.assert_array_equal(signs, -np.ones(5))
        np.testing.assert_allclose((W * signs) @ W.T, np.linalg.inv(A), atol=1e-8)

    def test_zero(self):
        W, signs = signed_inv_sqrt(np.zeros((3, 3)))
        assert W.shape == (3, 0) and signs.shape == (0,)

    @settings(max_examples=40, deadline=None)
    @given(m=st.integers(1, 10), seed=st.integers(0, 10**6))
    def test_reproduces_pinv(self, m, seed):
        A = rand_sym(m, seed)
        W, signs = signed_inv_sqrt(A)
        P = np.linalg.pinv(A, rcond=1e-10, hermitian=True)
        np.testing.assert_allclose((W * signs) @ W.T, P, atol=1e-8 * np.abs(P).max())


class TestSvd:
    def test_diag(self):
        _, s, _ = svd(np.diag([3.0, 2.0]))
        np.testing.assert_allclose(s, [3, 2])

    def test_rank_one(self):
        u, v = np.array([1.0, 2.0]), np.array([3.0, 0.0, 4.0])
        _, s, _ = svd(np.outer(u, v))
        np.testing.assert_allclose(s, [np.linalg.norm(u) * np.linalg.norm(v)])

    def test_reconstruction(self):
        A = np.random.default_rng(7).standard_normal((7, 4))
        Wl, s, Wr = svd(A)
        assert np.all(np.diff(s) <= 0)
        assert np.linalg.norm((Wl * s) @ Wr.T - A) <= 1e-10 * 7 * np.linalg.norm(A)


class TestSpectralNorm:
    def test_values(self):
        assert spectral_norm(np.diag([1.0, 5.0])) == pytest.approx(5.0)
        assert spectral_norm(np.zeros((3, 2))) == 0.0

    def test_matches_svd(self):
        A = np.random.default_rng(8).standard_normal((10, 10))
        assert spectral_norm(A) == pytest.approx(svd(A)[1].max(), rel=1e-14)


class TestOptimalRankK:
    def test_keeps_largest(self):
        np.testing.assert_allclose(optimal_rank_k(np.diag([3.0, 2.0, 1.0]), 1).to_dense(),
                                   np.diag([3.0, 0, 0]), atol=1e-15)

    def test_keeps_largest_magnitude(self):
        np.testing.assert_allclose(optimal_rank_k(np.diag([1.0, -4.0, 2.0]), 1).to_dense(),
                                   np.diag([0, -4.0, 0]), atol=1e-15)

    def test_full_rank_exact(self):
        K = rand_sym(6, 9)
        np.testing.assert_allclose(optimal_rank_k(K, 6).to_dense(), K, atol=1e-12)

    def test_error_equals_dropped_spectrum(self):
        K = rand_sym(12, 10)
        w = np.linalg.eigvalsh(K)
        dropped = w[np.argsort(-np.abs(w))][4:]
        err = np.linalg.norm(K - optimal_rank_k(K, 4).to_dense())
        assert err == pytest.approx(np.sqrt((dropped ** 2).sum()), rel=1e-10)

    @pytest.mark.parametrize("k", [0, 4])
    def test_bad_k(self, k):
        with pytest.raises(ParameterError):
            optimal_rank_k(np.eye(3), k)


@settings(max_examples=30, deadline=None)
@given(n=st.integers(4, 40), data=st.data())
def test_interlacing_psd(n, data):
    seed = data.draw(st.integers(0, 10**6))
    s2 = data.draw(st.integers(1, n))
    s1 = data.draw(st.integers(1, s2))
    K = random_psd(n, seed).matrix
    S1, S2 = sample_nested(n, s1, s2, seed)
    l1 = min_eigenvalue(K[np.ix_(S1.indices, S1.indices)])
    l2 = min_eigenvalue(K[np.ix_(S2.indices, S2.indices)])
    lk = min_eigenvalue(K)
    tol = 1e-9 * np.linalg.norm(K, 2)
    assert l1 >= l2 - tol
    assert l2 >= lk - tol
    assert lk >= -tol


@settings(max_examples=30, deadline=None)
@given(n=st.integers(4, 40), data=st.data())
def test_submatrix_monotonicity_indefinite(n, data):
    seed = data.draw(st.integers(0, 10**6))
    s2 = data.draw(st.integers(1, n))
    s1 = data.draw(st.integers(1, s2))
    K = low_rank_indefinite(n, [1.0] * 5 + [-1.0] * 3, seed).matrix
    S1, S2 = sample_nested(n, s1, s2, seed)
    l1 = min_eigenvalue(K[np.ix_(S1.indices, S1.indices)])
    l2 = min_eigenvalue(K[np.ix_(S2.indices, S2.indices)])
    assert l1 >= l2 - 1e-9 * np.linalg.norm(K, 2)
