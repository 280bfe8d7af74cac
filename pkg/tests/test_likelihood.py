"""Log-likelihood against dense oracles; analytic derivatives against
finite differences; per-observation score decomposition."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

import pstarann as pa
from conftest import (
    MODEL1_COLUMNS,
    fd_gradient,
    fd_jacobian,
    model1_spec,
    model1_theta,
    oracle_log_likelihood,
    random_causal_theta,
    random_panel,
)


class TestLogLikelihoodValues:
    def test_all_zero_case(self, w22):
        spec = pa.ModelSpec(W=w22, p=0, q=0, h=0, density=pa.normal())
        theta = pa.ParameterVector(0.0, [], [], [], [])
        data = pa.PanelData(Y=np.zeros((1, 4)), X=np.zeros((1, 4, 0)), p=0)
        ll = pa.log_likelihood(spec, theta, data)
        assert_allclose(ll, 4 * (-0.5 * math.log(2 * math.pi)), atol=1e-12)
        assert_allclose(ll, -3.675754, atol=5e-7)

    def test_hand_value_with_spatial_lag(self, w22):
        spec = pa.ModelSpec(W=w22, p=0, q=0, h=0, density=pa.normal())
        theta = pa.ParameterVector(0.5, [], [], [], [])
        data = pa.PanelData(Y=np.ones((1, 4)), X=np.zeros((1, 4, 0)), p=0)
        expected = (math.log(0.5) + 3 * math.log(7 / 6)
                    + 4 * (-0.5 * math.log(2 * math.pi) - 0.125))
        ll = pa.log_likelihood(spec, theta, data)
        assert_allclose(ll, expected, atol=1e-12)
        assert_allclose(ll, -4.406450, atol=5e-7)

    @pytest.mark.parametrize("density", [pa.normal(), pa.scaled_t(4), pa.laplace()],
                             ids=lambda d: d.label)
    def test_matches_dense_oracle(self, density, w33):
        rng = np.random.default_rng(17)
        spec = pa.ModelSpec(W=w33, p=1, q=2, h=2, density=density)
        theta = random_causal_theta(spec, rng)
        data = random_panel(spec, 3, rng)
        ll = pa.log_likelihood(spec, theta, data)
        assert abs(ll - oracle_log_likelihood(spec, theta, data)) < 1e-10

    def test_domain_sentinel_recorded(self, w22):
        spec = pa.ModelSpec(W=w22, p=0, q=0, h=0, density=pa.normal())
        data = pa.PanelData(Y=np.ones((1, 4)), X=np.zeros((1, 4, 0)), p=0)
        ws = pa.LikelihoodWorkspace(spec, data)
        assert ws.log_likelihood(pa.ParameterVector(1.5, [], [], [], [])) == -np.inf
        assert ws.n_domain_rejections == 1
        with pytest.raises(ValueError, match="admissible"):
            ws.gradient(pa.ParameterVector(1.5, [], [], [], []))


class TestGradient:
    def test_matches_finite_differences(self, w33):
        rng = np.random.default_rng(23)
        for density in (pa.normal(), pa.scaled_t(4)):
            spec = pa.ModelSpec(W=w33, p=1, q=2, h=2, density=density)
            theta = random_causal_theta(spec, rng)
            data = random_panel(spec, 3, rng)
            ws = pa.LikelihoodWorkspace(spec, data)
            g = ws.gradient(theta)

            def f(x):
                return ws.log_likelihood(pa.ParameterVector.from_array(x, spec))

            fd = fd_gradient(f, theta.to_array())
            assert np.max(np.abs(g - fd) / (1.0 + np.abs(g))) < 1e-6

    def test_gaussian_beta_block_is_x_transpose_eps(self, w33):
        # h=0, p=0, Normal: V = -eps, so the beta block reduces to X'eps
        rng = np.random.default_rng(29)
        spec = pa.ModelSpec(W=w33, p=0, q=3, h=0, density=pa.normal())
        theta = pa.ParameterVector(0.3, [], rng.standard_normal(3), [], [])
        data = random_panel(spec, 4, rng)
        E = pa.residual_matrix(spec, theta, data)
        g = pa.gradient(spec, theta, data)
        expected = np.einsum("tnq,tn->q", data.X, E)
        assert_allclose(g[1:], expected, atol=1e-10)

    def test_small_at_truth_on_large_panel(self):
        # at theta0 the scaled gradient is a mean-zero average
        spec = model1_spec(pa.build_queen_lattice(30, 30))
        theta0 = model1_theta()
        data = pa.simulate(spec, theta0, seed=13, T=30,
                           covariate_columns=MODEL1_COLUMNS)
        g = pa.gradient(spec, theta0, data) / (data.n * data.T)
        assert np.max(np.abs(g)) < 5.0 / math.sqrt(data.n * data.T)

    def test_phi0_entry_contains_trace(self, w22):
        # at Y = 0 the data part vanishes and only the trace term remains
        spec = pa.ModelSpec(W=w22, p=0, q=0, h=0, density=pa.normal())
        theta = pa.ParameterVector(0.4, [], [], [], [])
        data = pa.PanelData(Y=np.zeros((3, 4)), X=np.zeros((3, 4, 0)), p=0)
        g = pa.gradient(spec, theta, data)
        assert_allclose(g[0], -3 * w22.trace_w_a0inv(0.4, 1), atol=1e-12)


class TestHessian:
    def test_matches_finite_differences_of_gradient(self, w33):
        rng = np.random.default_rng(31)
        for density in (pa.normal(), pa.scaled_t(4)):
            spec = pa.ModelSpec(W=w33, p=1, q=2, h=2, density=density)
            theta = random_causal_theta(spec, rng)
            data = random_panel(spec, 3, rng)
            ws = pa.LikelihoodWorkspace(spec, data)
            H = ws.hessian(theta)

            def vf(x):
                return ws.gradient(pa.ParameterVector.from_array(x, spec))

            fd = fd_jacobian(vf, theta.to_array())
            fd = 0.5 * (fd + fd.T)
            assert np.max(np.abs(H - fd) / (1.0 + np.abs(H))) < 1e-4

    def test_gaussian_linear_beta_block(self, w33):
        # h=0, p=0, Normal: the beta block is -sum_t X_t' X_t exactly
        rng = np.random.default_rng(37)
        spec = pa.ModelSpec(W=w33, p=0, q=2, h=0, density=pa.normal())
        theta = pa.ParameterVector(0.2, [], [0.5, -1.0], [], [])
        data = random_panel(spec, 3, rng)
        H = pa.hessian(spec, theta, data)
        expected = -np.einsum("tnq,tnr->qr", data.X, data.X)
        assert_allclose(H[1:, 1:], expected, atol=1e-10)

    def test_phi0_phi0_pure_trace_at_zero_data(self, w22):
        spec = pa.ModelSpec(W=w22, p=0, q=0, h=0, density=pa.normal())
        theta = pa.ParameterVector(0.4, [], [], [], [])
        data = pa.PanelData(Y=np.zeros((5, 4)), X=np.zeros((5, 4, 0)), p=0)
        H = pa.hessian(spec, theta, data)
        assert_allclose(H[0, 0], -5 * w22.trace_w_a0inv(0.4, 2), atol=1e-12)

    def test_laplace_unavailable(self, w22):
        spec = pa.ModelSpec(W=w22, p=0, q=0, h=0, density=pa.laplace())
        theta = pa.ParameterVector(0.1, [], [], [], [])
        data = pa.PanelData(Y=np.ones((1, 4)), X=np.zeros((1, 4, 0)), p=0)
        with pytest.raises(ValueError, match="Laplace"):
            pa.hessian(spec, theta, data)

    def test_symmetric(self, w33):
        rng = np.random.default_rng(41)
        spec = pa.ModelSpec(W=w33, p=2, q=2, h=1, density=pa.scaled_t(5))
        theta = random_causal_theta(spec, rng)
        data = random_panel(spec, 4, rng)
        H = pa.hessian(spec, theta, data)
        assert_allclose(H, H.T, atol=0)


class TestScoreOuterProduct:
    def test_per_observation_scores_sum_to_gradient(self, w33):
        rng = np.random.default_rng(43)
        spec = pa.ModelSpec(W=w33, p=1, q=2, h=1, density=pa.scaled_t(4))
        theta = random_causal_theta(spec, rng)
        data = random_panel(spec, 3, rng)
        ws = pa.LikelihoodWorkspace(spec, data)
        S = ws.per_observation_scores(theta)
        g = ws.gradient(theta)
        assert np.max(np.abs(S.sum(axis=(0, 1)) - g)) < 1e-10 * (1 + np.max(np.abs(g)))

    def test_single_observation_rank_one(self):
        W = pa.from_adjacency([(0, 1)], 2)
        spec = pa.ModelSpec(W=W, p=0, q=1, h=0, density=pa.normal())
        theta = pa.ParameterVector(0.2, [], [0.5], [], [])
        rng = np.random.default_rng(47)
        data = pa.PanelData(Y=rng.standard_normal((1, 2)),
                            X=rng.standard_normal((1, 2, 1)), p=0)
        # smallest valid panel has n = 2 locations in one slice; each
        # location contributes a rank-1 outer product
        ws = pa.LikelihoodWorkspace(spec, data)
        S = ws.per_observation_scores(theta)
        one = np.outer(S[0, 0], S[0, 0])
        assert np.linalg.matrix_rank(one) == 1
        B = ws.score_outer_product(theta)
        manual = sum(np.outer(S[0, s], S[0, s]) for s in range(2)) / 2.0
        assert_allclose(B, manual, atol=1e-14)

    def test_workspace_cache_consistency(self, w33):
        # same theta evaluated twice reuses the cache; a new theta refreshes it
        rng = np.random.default_rng(53)
        spec = pa.ModelSpec(W=w33, p=1, q=2, h=1, density=pa.normal())
        data = random_panel(spec, 3, rng)
        ws = pa.LikelihoodWorkspace(spec, data)
        t1 = random_causal_theta(spec, rng)
        t2 = random_causal_theta(spec, rng)
        ll1 = ws.log_likelihood(t1)
        ws.log_likelihood(t2)
        assert ws.log_likelihood(t1) == ll1
        assert_allclose(pa.log_likelihood(spec, t1, data), ll1)


class TestInvariances:
    def test_permutation_and_flip_leave_likelihood(self, w33):
        rng = np.random.default_rng(59)
        spec = pa.ModelSpec(W=w33, p=1, q=2, h=3, density=pa.scaled_t(4),
                            include_intercept=True)
        for _ in range(5):
            theta = random_causal_theta(spec, rng)
            theta.gamma[1] = -theta.gamma[1]
            data = random_panel(spec, 3, rng)
            data.X[:, :, 0] = 1.0
            ll = pa.log_likelihood(spec, theta, data)

            perm = rng.permutation(3)
            theta_p = theta.copy()
            theta_p.lam, theta_p.gamma = theta.lam[perm], theta.gamma[perm]
            assert abs(pa.log_likelihood(spec, theta_p, data) - ll) < 1e-10

            theta_c = pa.canonicalize(theta, include_intercept=True)
            assert abs(pa.log_likelihood(spec, theta_c, data) - ll) < 1e-10
