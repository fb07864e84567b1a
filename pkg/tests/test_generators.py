import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smsnystrom.core import MatrixFormatError, ParameterError, symmetrize_oracle
from smsnystrom.evaluation import negativity_summary
from smsnystrom.generators import (
    FLAT_NEAR_PSD_PROFILE,
    TOP_HEAVY_NEAR_PSD_PROFILE,
    asymmetric_noise,
    exp_distance_oracle,
    low_rank_indefinite,
    parse_profile,
    planted_profile,
    planted_spectrum,
    profile_eigenvalues,
    random_psd,
    stored_matrix_oracle,
)
from smsnystrom.matrix_io import MAGIC, read_matrix, write_matrix


class TestRandomPSD:
    def test_symmetric_and_psd(self):
        K = random_psd(30, 1).matrix
        np.testing.assert_array_equal(K, K.T)
        assert np.linalg.eigvalsh(K).min() >= -1e-8 * np.linalg.norm(K, 2)

    def test_single_entry(self):
        K = random_psd(1, 5).matrix
        assert K.shape == (1, 1) and K[0, 0] > 0

    def test_deterministic(self):
        np.testing.assert_array_equal(random_psd(10, 3).matrix, random_psd(10, 3).matrix)
        assert not np.array_equal(random_psd(10, 3).matrix, random_psd(10, 4).matrix)

    def test_bad_n(self):
        with pytest.raises(ParameterError):
            random_psd(0, 1)


class TestPlanted:
    def test_all_ones_is_identity(self):
        np.testing.assert_allclose(planted_spectrum(6, np.ones(6), 0).matrix, np.eye(6),
                                   atol=1e-10)

    def test_two_by_two(self):
        w = np.linalg.eigvalsh(planted_spectrum(2, [5.0, -1.0], 3).matrix)
        np.testing.assert_allclose(w, [-1.0, 5.0], atol=1e-8)

    @settings(max_examples=30, deadline=None)
    @given(n=st.integers(1, 30), seed=st.integers(0, 10**6))
    def test_spectrum_round_trip(self, n, seed):
        lam = np.random.default_rng(seed).uniform(-2, 2, n)
        o = planted_spectrum(n, lam, seed)
        np.testing.assert_array_equal(o.matrix, o.matrix.T)
        np.testing.assert_allclose(np.linalg.eigvalsh(o.matrix), np.sort(lam), atol=1e-8)

    def test_wrong_length(self):
        with pytest.raises(ParameterError):
            planted_spectrum(3, [1.0, 2.0], 0)

    def test_flat_profile_is_indefinite(self, flat_planted):
        w = np.linalg.eigvalsh(flat_planted.matrix)
        assert w.min() < 0
        assert negativity_summary(flat_planted.matrix)[0] == 100
        assert w.max() <= 1 + 1e-8 and w[100] >= 0.5 - 1e-8

    def test_top_heavy_profile(self, top_heavy_planted):
        w = np.linalg.eigvalsh(top_heavy_planted.matrix)
        assert negativity_summary(top_heavy_planted.matrix)[0] == 100
        assert w.max() == pytest.approx(50.0)

    def test_profile_parsing(self):
        assert parse_profile("45:0.5..1,5:-0.1..-0.001") == [(45, 0.5, 1.0), (5, -0.1, -0.001)]
        assert parse_profile("2:3..1") == [(2, 1.0, 3.0)]
        for bad in ("", "5", "a:1..2", "3:1-2"):
            with pytest.raises(ParameterError):
                parse_profile(bad)

    def test_profile_values_in_ranges(self):
        lam = profile_eigenvalues(FLAT_NEAR_PSD_PROFILE, 1)
        assert lam.size == 1000
        assert np.all((lam[:900] >= 0.5) & (lam[:900] <= 1))
        assert np.all((lam[900:] >= -0.1) & (lam[900:] <= -0.001))
        assert profile_eigenvalues(TOP_HEAVY_NEAR_PSD_PROFILE, 0).size == 1000

    def test_profile_count_mismatch(self):
        with pytest.raises(ParameterError):
            planted_profile(10, "5:0..1", 0)

    def test_small_profile_negative_count(self):
        K = planted_profile(50, "45:0.5..1,5:-0.1..-0.001", 2).matrix
        assert negativity_summary(K)[0] == 5


def test_low_rank_indefinite_rank_and_signs():
    K = low_rank_indefinite(30, [1.0, 1.0, -1.0], 0).matrix
    w = np.linalg.eigvalsh(K)
    big = np.abs(w) > 1e-8 * np.abs(w).max()
    assert big.sum() == 3
    assert (w[big] < 0).sum() == 1


class TestExpDistance:
    def test_closed_form(self):
        o = exp_distance_oracle(np.array([[0.0], [1.0], [3.0]]), gamma=0.7)
        assert o(0, 0) == 1.0
        assert o(0, 1) == pytest.approx(np.exp(-0.7))
        assert o(1, 2) == pytest.approx(np.exp(-1.4))
        assert o(2, 1) == o(1, 2)
        assert o.symmetric_hint

    def test_bad_gamma(self):
        with pytest.raises(ParameterError):
            exp_distance_oracle(np.zeros((2, 2)), 0.0)


class TestStoredMatrix:
    @pytest.mark.parametrize("name", ["k.csv", "k.bin"])
    def test_round_trip(self, tmp_path, name):
        K = np.random.default_rng(0).standard_normal((7, 7))
        K[0, 0] = 1e-300
        K[1, 2] = -123456789.123456789
        path = tmp_path / name
        write_matrix(path, K)
        np.testing.assert_array_equal(stored_matrix_oracle(path).matrix, K)

    def test_asymmetric_hint(self, tmp_path):
        K = np.random.default_rng(1).standard_normal((4, 4))
        write_matrix(tmp_path / "a.csv", K)
        assert not stored_matrix_oracle(tmp_path / "a.csv").symmetric_hint
        write_matrix(tmp_path / "s.csv", K + K.T)
        assert stored_matrix_oracle(tmp_path / "s.csv").symmetric_hint

    def test_cross_format(self, tmp_path):
        A = np.random.default_rng(2).standard_normal((9, 9))
        K = A + A.T
        write_matrix(tmp_path / "k.csv", K)
        write_matrix(tmp_path / "k.bin", K)
        a = stored_matrix_oracle(tmp_path / "k.csv")
        b = stored_matrix_oracle(tmp_path / "k.bin")
        np.testing.assert_array_equal(a.matrix, b.matrix)
        assert a.symmetric_hint == b.symmetric_hint

    def test_binary_layout(self, tmp_path):
        K = np.array([[1.0, 2.0], [3.0, 4.0]])
        write_matrix(tmp_path / "k.bin", K)
        raw = (tmp_path / "k.bin").read_bytes()
        assert raw[:4] == MAGIC and raw[4] == 1
        assert int.from_bytes(raw[5:13], "little") == 2
        np.testing.assert_array_equal(np.frombuffer(raw[13:], "<f8"), [1, 2, 3, 4])

    def test_csv_layout(self, tmp_path):
        write_matrix(tmp_path / "k.csv", np.array([[1.0, 0.1], [0.1, 1.0]]))
        assert (tmp_path / "k.csv").read_text() == (
            "2\n1,0.10000000000000001\n0.10000000000000001,1\n"
        )

    @pytest.mark.parametrize("content", [
        "",
        "2\n1,2\n",
        "2\n1,2\n3\n",
        "2\n1,x\n3,4\n",
        "2\n1,nan\n3,4\n",
        "-1\n",
    ])
    def test_malformed_csv(self, tmp_path, content):
        p = tmp_path / "bad.csv"
        p.write_text(content)
        with pytest.raises(MatrixFormatError):
            read_matrix(p)

    def test_malformed_binary(self, tmp_path):
        p = tmp_path / "bad.bin"
        write_matrix(p, np.eye(3))
        p.write_bytes(p.read_bytes()[:-8])
        with pytest.raises(MatrixFormatError):
            read_matrix(p)
        p.write_bytes(MAGIC + bytes([2]) + (1).to_bytes(8, "little") + bytes(8))
        with pytest.raises(MatrixFormatError):
            read_matrix(p)

    def test_missing(self, tmp_path):
        with pytest.raises(MatrixFormatError):
            stored_matrix_oracle(tmp_path / "nope.csv")

    def test_write_rejects_non_square(self, tmp_path):
        with pytest.raises(ParameterError):
            write_matrix(tmp_path / "x.csv", np.zeros((2, 3)))


class TestAsymmetricNoise:
    def test_zero_epsilon_identity(self):
        inner = random_psd(8, 0)
        o = asymmetric_noise(inner, 0.0, 3)
        np.testing.assert_array_equal(o.dense(), inner.matrix)
        assert o.symmetric_hint

    def test_symmetrized_within_epsilon(self):
        inner = random_psd(10, 1)
        o = asymmetric_noise(inner, 0.05, 7)
        assert not o.symmetric_hint
        sym = symmetrize_oracle(o).dense()
        assert np.abs(sym - inner.matrix).max() <= 0.05

    def test_noise_not_symmetric(self):
        o = asymmetric_noise(random_psd(20, 2), 0.1, 11)
        i, j = np.triu_indices(20, 1)
        assert np.mean(o.noise(i, j) != o.noise(j, i)) > 0.99

    def test_deterministic_and_bounded(self):
        o = asymmetric_noise(random_psd(15, 3), 0.2, 5)
        a = o.dense()
        b = o.block([3, 1], [0, 14])
        np.testing.assert_array_equal(a[np.ix_([3, 1], [0, 14])], b)
        nz = o.noise(np.repeat(np.arange(15), 15), np.tile(np.arange(15), 15))
        assert np.abs(nz).max() <= 0.2
        assert abs(nz.mean()) < 0.05

    def test_bad_params(self):
        with pytest.raises(ParameterError):
            asymmetric_noise(random_psd(3, 0), -1.0, 0)
