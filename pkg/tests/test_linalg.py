import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from matkaczmarz.linalg import (InconsistentSystemError, RankDeficientError,
                                SizeGuardError, as_sparse_rows, density,
                                frobenius_norm, kron_small, min_norm_solution,
                                pinv, qr_thin, row_norms_squared,
                                sigma_min_positive, spectral_norm, svd, unvec,
                                vec)
from matkaczmarz.imaging import CROSS_CHANNEL

from oracles import jacobi_singular_values, pinv_by_normal_equations
from oracles import vec as vec_oracle

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def small_matrix(max_side=6):
    return st.tuples(st.integers(1, max_side), st.integers(1, max_side)).flatmap(
        lambda s: arrays(np.float64, s, elements=finite))


class TestNorms:
    def test_frobenius_examples(self):
        assert frobenius_norm(np.eye(2)) == pytest.approx(np.sqrt(2))
        assert frobenius_norm(np.zeros((3, 2))) == 0.0
        # direct sum of squares of the cross-channel matrix
        expected = np.sqrt(sum(v * v for v in CROSS_CHANNEL.ravel()))
        assert frobenius_norm(CROSS_CHANNEL) == pytest.approx(expected, rel=1e-14)
        assert expected == pytest.approx(1.53948, abs=5e-6)

    def test_row_norms_examples(self):
        np.testing.assert_array_equal(row_norms_squared(sp.identity(3, format="csr")), [1, 1, 1])
        np.testing.assert_array_equal(row_norms_squared(np.array([[1.0, 2], [0, 3]])), [5, 9])
        A = sp.csr_matrix(np.array([[1.0, 0], [0, 0]]))
        assert row_norms_squared(A)[1] == 0.0

    @given(small_matrix())
    def test_row_norms_sum_to_frobenius(self, M):
        total = row_norms_squared(sp.csr_matrix(M)).sum()
        assert total == pytest.approx(frobenius_norm(M) ** 2, rel=1e-12, abs=1e-300)

    def test_spectral_norm_examples(self):
        assert spectral_norm(np.diag([3.0, 1.0])) == pytest.approx(3.0, rel=1e-12)
        assert spectral_norm(np.array([[0.0, 1], [0, 0]])) == pytest.approx(1.0, rel=1e-12)
        assert spectral_norm(np.array([[-2.0]])) == pytest.approx(2.0, rel=1e-12)

    def test_spectral_norm_power_iteration_path(self):
        rng = np.random.default_rng(0)
        M = rng.standard_normal((300, 90))
        ref = jacobi_singular_values(M)[0]
        assert spectral_norm(M) == pytest.approx(ref, rel=1e-12)
        assert spectral_norm(sp.csr_matrix(M)) == pytest.approx(ref, rel=1e-12)

    def test_zero_matrix_rejected(self):
        with pytest.raises(ValueError):
            spectral_norm(np.zeros((3, 3)))
        with pytest.raises(ValueError):
            sigma_min_positive(np.zeros((2, 2)))

    def test_sigma_min_examples(self):
        assert sigma_min_positive(np.diag([3.0, 1.0])) == pytest.approx(1.0)
        assert sigma_min_positive(np.ones((2, 2))) == pytest.approx(2.0)
        Q, _ = np.linalg.qr(np.random.default_rng(1).standard_normal((5, 3)))
        assert sigma_min_positive(Q) == pytest.approx(1.0, rel=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(small_matrix(8))
    def test_singular_values_against_jacobi(self, M):
        s_ref = jacobi_singular_values(M)
        if s_ref[0] == 0:
            return
        assert spectral_norm(M) == pytest.approx(s_ref[0], rel=1e-10)
        tol = s_ref[0] * max(M.shape) * np.finfo(float).eps
        pos = s_ref[s_ref > 10 * tol]
        if pos.size and np.all(np.abs(s_ref[s_ref <= 10 * tol]) < tol / 10 + 1e-300):
            assert sigma_min_positive(M) == pytest.approx(pos[-1], rel=1e-8)


class TestSvd:
    @settings(max_examples=30, deadline=None)
    @given(small_matrix(7))
    def test_reconstruction_and_order(self, M):
        f = svd(M)
        assert np.all(np.diff(f.s) <= 0) and np.all(f.s >= 0)
        smax = f.s[0] if f.s.size else 0.0
        assert np.linalg.norm(f.u * f.s @ f.vt - M) <= 1e-10 * max(smax, 1e-300) + 1e-300

    def test_pinv_matches_normal_equation_route(self):
        rng = np.random.default_rng(2)
        M = rng.standard_normal((6, 3)) @ rng.standard_normal((3, 5))
        np.testing.assert_allclose(pinv(M), pinv_by_normal_equations(M), atol=1e-9)

    def test_size_guard(self):
        with pytest.raises(SizeGuardError):
            svd(np.zeros((4097, 4097)))


class TestQr:
    def test_examples(self):
        f = qr_thin(np.array([[3.0], [4.0]]))
        np.testing.assert_allclose(f.q, [[0.6], [0.8]], atol=1e-15)
        np.testing.assert_allclose(f.r, [[5.0]], atol=1e-14)
        Q, _ = np.linalg.qr(np.random.default_rng(3).standard_normal((5, 3)))
        f = qr_thin(Q)
        np.testing.assert_allclose(f.q, Q, atol=1e-12)
        np.testing.assert_allclose(f.r, np.eye(3), atol=1e-12)

    def test_rank_deficient(self):
        with pytest.raises(RankDeficientError):
            qr_thin(np.array([[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]]))
        with pytest.raises(RankDeficientError):
            qr_thin(np.ones((2, 3)))

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 6), st.integers(0, 4), st.integers(0, 2**31))
    def test_factorization_properties(self, n, extra, seed):
        B = np.random.default_rng(seed).standard_normal((n + extra, n))
        f = qr_thin(B)
        assert np.linalg.norm(f.q @ f.r - B) <= 1e-12 * np.linalg.norm(B)
        assert np.linalg.norm(f.q.T @ f.q - np.eye(n)) <= 1e-12 * n
        assert np.all(np.diag(f.r) > 0)
        np.testing.assert_array_equal(f.r, np.triu(f.r))


class TestMinNorm:
    def test_examples(self):
        C = np.arange(6.0).reshape(2, 3)
        np.testing.assert_allclose(min_norm_solution(np.eye(2), np.eye(3), C), C)
        np.testing.assert_allclose(min_norm_solution(np.array([[1.0, 1.0]]), np.array([[1.0]]),
                                                     np.array([[2.0]])), [[1.0], [1.0]])
        np.testing.assert_allclose(min_norm_solution(np.array([[2.0]]), np.array([[2.0]]),
                                                     np.array([[8.0]])), [[2.0]])

    def test_inconsistent(self):
        A = np.array([[1.0], [1.0]])
        with pytest.raises(InconsistentSystemError):
            min_norm_solution(A, np.eye(1), np.array([[1.0], [2.0]]))

    @pytest.mark.parametrize("seed", range(20))
    def test_minimality(self, seed):
        rng = np.random.default_rng(seed)
        A = rng.standard_normal((5, 3)) @ rng.standard_normal((3, 7))
        B = rng.standard_normal((4, 2)) @ rng.standard_normal((2, 6))
        C = A @ rng.standard_normal((7, 4)) @ B
        X = min_norm_solution(A, B, C)
        Ap, Bp = pinv_by_normal_equations(A), pinv_by_normal_equations(B)
        U = rng.standard_normal(X.shape)
        other = X + (U - Ap @ A @ U @ B @ Bp)
        assert np.linalg.norm(A @ other @ B - C) <= 1e-8 * np.linalg.norm(C)
        assert np.linalg.norm(other) >= np.linalg.norm(X) - 1e-12


class TestKronVec:
    def test_examples(self):
        np.testing.assert_array_equal(kron_small(np.eye(2), np.eye(2)), np.eye(4))
        np.testing.assert_array_equal(kron_small(np.array([[2.0]]), np.eye(2)), 2 * np.eye(2))
        np.testing.assert_array_equal(vec(np.array([[1.0, 3], [2, 4]])), [1, 2, 3, 4])
        assert vec(np.array([[5.0]])).tolist() == [5.0]

    def test_vec_identity(self):
        rng = np.random.default_rng(4)
        A, X, B = rng.standard_normal((4, 3)), rng.standard_normal((3, 2)), rng.standard_normal((2, 5))
        lhs = kron_small(B.T, A) @ vec(X)
        np.testing.assert_allclose(lhs, vec_oracle(A @ X @ B), rtol=1e-12, atol=1e-12)
        P, Q, Y = rng.standard_normal((2, 2)), rng.standard_normal((3, 3)), rng.standard_normal((3, 2))
        np.testing.assert_allclose(kron_small(P, Q) @ vec(Y), vec_oracle(Q @ Y @ P.T), atol=1e-13)

    @given(small_matrix())
    def test_unvec_round_trip(self, M):
        np.testing.assert_array_equal(unvec(vec(M), *M.shape), M)

    def test_guards(self):
        with pytest.raises(ValueError):
            unvec(np.arange(5.0), 2, 3)
        with pytest.raises(SizeGuardError):
            kron_small(np.eye(65), np.eye(64))


def test_density():
    assert density(sp.identity(3, format="csr")) == pytest.approx(1 / 3)
    assert density(np.random.default_rng(0).standard_normal((4, 5))) == 1.0


def test_canonical_csr():
    A = sp.coo_matrix(([1.0, 2.0, 0.0], ([0, 0, 1], [1, 1, 0])), shape=(2, 2))
    C = as_sparse_rows(A)
    assert C.has_sorted_indices and C.nnz == 1 and C[0, 1] == 3.0
    with pytest.raises(ValueError):
        as_sparse_rows(np.array([[np.nan]]))
