import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from kernel_tsne.errors import DimensionError, InputError, ParameterError, UnsupportedKernelError
from kernel_tsne.kernels import (
    LINEAR,
    KernelSpec,
    eval_kernel,
    gram_matrix,
    kernel_distance_matrix,
    kernel_pair_gradient,
    kernel_pair_gradient_fd,
    nystrom_gram,
    pair_gradient_weights,
    pair_gradients_fd,
    rff_features,
    squared_euclidean,
)

import oracles

RBF1 = KernelSpec.rbf(1.0)

finite = st.floats(-5, 5, allow_nan=False, allow_infinity=False)
small_matrices = st.integers(2, 12).flatmap(
    lambda n: st.integers(1, 5).flatmap(lambda d: arrays(np.float64, (n, d), elements=finite))
)


class TestKernelSpec:
    def test_rbf_needs_positive_gamma(self):
        with pytest.raises(ParameterError):
            KernelSpec.rbf(0.0)
        with pytest.raises(ParameterError):
            KernelSpec.rbf(-1.0)

    def test_kind_from_string(self):
        assert KernelSpec("linear").kind.value == "linear"


class TestEvalKernel:
    def test_rbf_self_is_one(self):
        assert eval_kernel(RBF1, [3.7, -2.0], [3.7, -2.0]) == 1.0

    def test_rbf_unit_distance(self):
        assert eval_kernel(RBF1, [0, 0], [1, 0]) == pytest.approx(math.exp(-1), rel=1e-15)
        assert eval_kernel(RBF1, [0, 0], [1, 0]) == pytest.approx(0.3678794, abs=1e-7)

    def test_linear_dot(self):
        assert eval_kernel(LINEAR, [1, 2], [3, 4]) == 11

    def test_linear_self_is_squared_norm(self):
        assert eval_kernel(LINEAR, [3.0, 4.0], [3.0, 4.0]) == 25.0

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            eval_kernel(RBF1, [1, 2], [1, 2, 3])


class TestGram:
    def test_identical_rows_rbf(self):
        np.testing.assert_array_equal(gram_matrix(RBF1, [[1.0, 2.0], [1.0, 2.0]]), np.ones((2, 2)))

    def test_tiny_gamma_flattens(self, rng):
        K = gram_matrix(KernelSpec.rbf(1e-12), rng.normal(size=(3, 4)))
        assert np.all(np.abs(K - 1.0) < 1e-9)

    def test_linear_orthonormal_rows(self):
        np.testing.assert_array_equal(gram_matrix(LINEAR, np.eye(2)), np.eye(2))

    def test_matches_elementwise_evaluation(self, rng):
        X = rng.normal(size=(7, 3))
        for spec, k in [(KernelSpec.rbf(0.3), oracles.kernel_fn("rbf", 0.3)), (LINEAR, oracles.linear)]:
            np.testing.assert_allclose(gram_matrix(spec, X), oracles.naive_gram(k, X.tolist()), atol=1e-12)

    def test_rejects_non_finite(self):
        with pytest.raises(InputError):
            gram_matrix(RBF1, [[0.0, np.nan], [1.0, 2.0]])

    @settings(max_examples=50, deadline=None)
    @given(small_matrices, st.floats(1e-3, 10))
    def test_rbf_symmetric_and_bounded(self, X, gamma):
        K = gram_matrix(KernelSpec.rbf(gamma), X)
        assert np.array_equal(K, K.T)
        assert np.all(np.diag(K) == 1.0)
        assert np.all(K <= 1.0) and np.all(K >= 0.0)


class TestKernelDistances:
    def test_zero_diagonal(self, rng):
        X = rng.normal(size=(6, 3))
        for spec in (RBF1, LINEAR):
            assert np.all(np.diag(kernel_distance_matrix(spec, X)) == 0.0)

    def test_rbf_unit_pair(self):
        D = kernel_distance_matrix(RBF1, [[0.0, 0.0], [1.0, 0.0]])
        # 1 - 2 exp(-1) + 1
        assert D[0, 1] == pytest.approx(2 - 2 * math.exp(-1), abs=1e-15)
        assert D[0, 1] == pytest.approx(1.2642411, abs=1e-7)

    def test_linear_equals_squared_euclidean(self, rng):
        for _ in range(20):
            X = rng.normal(size=(15, 4))
            np.testing.assert_allclose(kernel_distance_matrix(LINEAR, X), oracles.naive_sq_euclidean(X),
                                       rtol=0, atol=1e-12)

    def test_squared_euclidean_is_linear_kernel_path(self, rng):
        X = rng.normal(size=(30, 5))
        assert np.array_equal(squared_euclidean(X), kernel_distance_matrix(LINEAR, X))

    @settings(max_examples=50, deadline=None)
    @given(small_matrices, st.floats(1e-3, 10))
    def test_rbf_range(self, X, gamma):
        spec = KernelSpec.rbf(gamma)
        D = kernel_distance_matrix(spec, X)
        assert np.array_equal(D, D.T)
        assert np.all(D >= 0) and np.all(D <= 2)
        # 2 is reached only once exp underflows past double precision
        assert np.all(D[gram_matrix(spec, X) > 1e-15] < 2)


def _two_blobs(rng, n=100):
    centers = np.array([[-4.0, 0.0], [4.0, 0.0]])
    return centers[np.arange(n) % 2] + 0.2 * rng.normal(size=(n, 2))


class TestNystrom:
    def test_all_landmarks_exact(self, rng):
        X = rng.normal(size=(40, 3))
        np.testing.assert_allclose(nystrom_gram(RBF1, X, 40, seed=3), gram_matrix(RBF1, X), atol=1e-8, rtol=0)

    def test_single_landmark_identical_rows(self):
        X = np.tile([[0.5, -1.0]], (5, 1))
        np.testing.assert_allclose(nystrom_gram(RBF1, X, 1), np.ones((5, 5)), atol=1e-12)

    def test_clustered_relative_error(self, rng):
        X = _two_blobs(rng)
        K = gram_matrix(RBF1, X)
        err = np.linalg.norm(K - nystrom_gram(RBF1, X, 20, seed=0)) / np.linalg.norm(K)
        assert err < 0.05

    def test_symmetric_psd(self, rng):
        X = rng.normal(size=(30, 2))
        Kt = nystrom_gram(RBF1, X, 10, seed=1)
        assert np.array_equal(Kt, Kt.T)
        assert np.linalg.eigvalsh(Kt).min() > -1e-8

    @pytest.mark.parametrize("m", [0, 11])
    def test_landmark_range(self, m):
        with pytest.raises(ParameterError):
            nystrom_gram(RBF1, np.zeros((10, 2)), m)


class TestRFF:
    def test_self_inner_product_bounded(self, rng):
        X = rng.normal(size=(20, 3))
        for r in (1, 7, 100):
            Z = rff_features(RBF1, X, r, seed=2)
            assert np.all(np.sum(Z * Z, axis=1) <= 2.0 + 1e-12)

    def test_rank_one_with_single_feature(self, rng):
        Z = rff_features(RBF1, rng.normal(size=(10, 3)), 1)
        assert np.linalg.matrix_rank(Z @ Z.T) <= 1

    def test_converges_at_4096(self, rng):
        X = rng.uniform(-1, 1, size=(50, 2))
        K = gram_matrix(RBF1, X)
        Z = rff_features(RBF1, X, 4096, seed=0)
        assert np.max(np.abs(Z @ Z.T - K)) < 0.1

    def test_seed_averaged_error_decreases(self, rng):
        X = rng.uniform(-1, 1, size=(50, 2))
        K = gram_matrix(RBF1, X)
        errs = [np.mean([np.mean(np.abs(Z @ Z.T - K)) for Z in (rff_features(RBF1, X, r, seed=s) for s in range(5))])
                for r in (64, 128, 256, 512, 1024, 2048, 4096)]
        assert all(b <= a for a, b in zip(errs, errs[1:]))

    def test_linear_unsupported(self):
        with pytest.raises(UnsupportedKernelError):
            rff_features(LINEAR, np.zeros((2, 2)), 4)

    def test_deterministic(self, rng):
        X = rng.normal(size=(5, 2))
        assert np.array_equal(rff_features(RBF1, X, 16, seed=9), rff_features(RBF1, X, 16, seed=9))


class TestPairGradient:
    def test_equal_points(self):
        np.testing.assert_array_equal(kernel_pair_gradient(RBF1, [1.0, 2.0], [1.0, 2.0]), [0.0, 0.0])
        np.testing.assert_allclose(kernel_pair_gradient_fd(RBF1, [1.0, 2.0], [1.0, 2.0]), [0.0, 0.0], atol=1e-8)

    def test_linear(self):
        np.testing.assert_array_equal(kernel_pair_gradient(LINEAR, [1.0, 0.0], [0.0, 1.0]), [2.0, -2.0])

    def test_rbf_value(self):
        g = kernel_pair_gradient(RBF1, [1.0, 0.0], [0.0, 0.0])
        np.testing.assert_allclose(g, [4 * math.exp(-1), 0.0], rtol=1e-15)
        fd = kernel_pair_gradient_fd(RBF1, [1.0, 0.0], [0.0, 0.0])
        assert np.linalg.norm(g - fd) / np.linalg.norm(fd) < 1e-6

    @pytest.mark.parametrize("spec", [KernelSpec.rbf(0.7), LINEAR], ids=["rbf", "linear"])
    def test_fd_agreement_random_pairs(self, spec, rng):
        for _ in range(100):
            yi, yj = rng.normal(size=3), rng.normal(size=3)
            g = kernel_pair_gradient(spec, yi, yj)
            fd = kernel_pair_gradient_fd(spec, yi, yj)
            assert np.linalg.norm(g - fd) <= 1e-6 * np.linalg.norm(g) + 1e-12

    def test_fd_exact_for_linear(self, rng):
        yi, yj = rng.normal(size=4), rng.normal(size=4)
        np.testing.assert_allclose(kernel_pair_gradient_fd(LINEAR, yi, yj), 2 * (yi - yj), atol=1e-8)

    def test_fd_step_must_be_positive(self):
        with pytest.raises(ParameterError):
            kernel_pair_gradient_fd(RBF1, [0.0], [1.0], h=0.0)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            kernel_pair_gradient(RBF1, [0.0], [1.0, 2.0])

    @pytest.mark.parametrize("spec", [KernelSpec.rbf(0.4), LINEAR], ids=["rbf", "linear"])
    def test_bulk_helpers_match_pairwise(self, spec, rng):
        Y = rng.normal(size=(6, 2))
        S = pair_gradient_weights(spec, Y)
        T = pair_gradients_fd(spec, Y)
        for i in range(6):
            for j in range(6):
                g = kernel_pair_gradient(spec, Y[i], Y[j])
                np.testing.assert_allclose(S[i, j] * (Y[i] - Y[j]), g, atol=1e-14)
                np.testing.assert_allclose(T[i, j], kernel_pair_gradient_fd(spec, Y[i], Y[j]), atol=1e-9)
