"""Parameter vector, network component, residuals, causality, canonical form."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

import pstarann as pa
from conftest import model1_spec, model1_theta, random_causal_theta, random_panel


class TestNNComponent:
    def test_zero_inputs_give_half_sigmoid(self):
        X = np.zeros((5, 3))
        out = pa.nn_component(X, [1.5], [[0.2, -0.4, 1.0]])
        assert_allclose(out, 0.75)

    def test_no_neurons_gives_zero(self):
        X = np.ones((4, 2))
        assert_allclose(pa.nn_component(X, [], np.zeros((0, 2))), 0.0)

    def test_scalar_evaluation(self):
        out = pa.nn_component(np.array([[1.0, 1.0]]), [1.5], [[0.75, -0.35]])
        assert_allclose(out, 1.5 / (1.0 + np.exp(-0.4)), atol=1e-12)

    def test_sigmoid_stable_for_extreme_arguments(self):
        z = np.array([-800.0, -30.0, 0.0, 30.0, 800.0])
        F = pa.sigmoid(z)
        assert np.all(np.isfinite(F))
        assert F[0] == 0.0 and F[-1] == 1.0
        assert_allclose(F[2], 0.5)

    def test_two_neurons_sum(self):
        X = np.array([[1.0, 2.0]])
        lam = [2.0, -1.0]
        gamma = [[0.5, 0.1], [1.0, -0.3]]
        expected = 2.0 * pa.sigmoid(0.7) - 1.0 * pa.sigmoid(0.4)
        assert_allclose(pa.nn_component(X, lam, gamma), expected, atol=1e-12)


class TestResiduals:
    def test_zero_theta_returns_y(self, w33):
        spec = pa.ModelSpec(W=w33, p=1, q=2, h=1, density=pa.normal())
        theta = pa.ParameterVector(0.0, [0.0], [0.0, 0.0], [0.0], [[0.0, 0.0]])
        rng = np.random.default_rng(0)
        data = random_panel(spec, 3, rng)
        E = pa.residual_matrix(spec, theta, data)
        assert_allclose(E, data.Y_sample, atol=1e-14)

    def test_simulator_round_trip(self, w33):
        spec = model1_spec(w33)
        theta = model1_theta()
        data = pa.simulate(spec, theta, seed=4, T=6, covariate_columns=[
            {"kind": "normal", "sd": 1.5}, {"kind": "normal", "sd": 3.0}])
        E = pa.residual_matrix(spec, theta, data)
        assert np.max(np.abs(E - data.eps)) < 1e-9

    def test_hand_computed_spatial_lag(self, w22):
        # p=0, h=0, q=0: eps_1 = Y_1 - 0.5 W Y_1 = 0.5 * ones for Y_1 = ones
        spec = pa.ModelSpec(W=w22, p=0, q=0, h=0, density=pa.normal())
        theta = pa.ParameterVector(0.5, [], [], [], [])
        data = pa.PanelData(Y=np.ones((1, 4)), X=np.zeros((1, 4, 0)), p=0)
        E = pa.residual_matrix(spec, theta, data)
        assert_allclose(E, 0.5, atol=1e-14)

    def test_neuron_permutation_invariance(self, w33):
        rng = np.random.default_rng(5)
        spec = pa.ModelSpec(W=w33, p=1, q=2, h=3, density=pa.normal())
        data = random_panel(spec, 4, rng)
        theta = random_causal_theta(spec, rng)
        E0 = pa.residual_matrix(spec, theta, data)
        for _ in range(5):
            perm = rng.permutation(3)
            theta_p = theta.copy()
            theta_p.lam = theta.lam[perm]
            theta_p.gamma = theta.gamma[perm]
            assert_allclose(pa.residual_matrix(spec, theta_p, data), E0, atol=1e-14)

    def test_shape_mismatch_raises(self, w33):
        spec = pa.ModelSpec(W=w33, p=1, q=2, h=0, density=pa.normal())
        data = random_panel(spec, 3, np.random.default_rng(1))
        theta = pa.ParameterVector(0.1, [0.1, 0.2], [0.0, 0.0], [], [])
        with pytest.raises(ValueError, match="phi"):
            pa.residual_matrix(spec, theta, data)


class TestCheckCausal:
    def test_benchmark_design_modulus(self, w33):
        spec = model1_spec(w33)
        chk = pa.check_causal(spec, model1_theta())
        assert chk.causal
        assert abs(chk.max_root_modulus - 0.685) < 1e-9

    def test_zero_phis_trivially_causal(self, w33):
        spec = pa.ModelSpec(W=w33, p=1, q=0, h=0, density=pa.normal())
        chk = pa.check_causal(spec, pa.ParameterVector(0.0, [0.0], [], [], []))
        assert chk.causal and chk.max_root_modulus == 0.0

    def test_explosive_lag_not_causal(self):
        W = pa.from_adjacency([(0, 1)], 2)  # tau_max = 1
        spec = pa.ModelSpec(W=W, p=1, q=0, h=0, density=pa.normal())
        chk = pa.check_causal(spec, pa.ParameterVector(0.0, [1.2], [], [], []))
        assert not chk.causal
        assert_allclose(chk.max_root_modulus, 1.2, atol=1e-12)

    def test_p0_trivial(self, w22):
        spec = pa.ModelSpec(W=w22, p=0, q=0, h=0, density=pa.normal())
        chk = pa.check_causal(spec, pa.ParameterVector(0.5, [], [], [], []))
        assert chk == (True, 0.0)

    def test_vanishing_leading_coefficient(self):
        W = pa.from_adjacency([(0, 1)], 2)  # spectrum {1, -1}
        spec = pa.ModelSpec(W=W, p=1, q=0, h=0, density=pa.normal())
        with pytest.raises(ValueError, match="leading coefficient"):
            pa.check_causal(spec, pa.ParameterVector(1.0, [0.3], [], [], []))

    def test_p2_roots_against_numpy(self, w22):
        spec = pa.ModelSpec(W=w22, p=2, q=0, h=0, density=pa.normal())
        theta = pa.ParameterVector(0.4, [0.3, -0.2], [], [], [])
        chk = pa.check_causal(spec, theta)
        worst = 0.0
        for tau in w22.eigenvalues:
            roots = np.roots([1.0 - 0.4 * tau, -0.3 * tau, 0.2 * tau])
            worst = max(worst, np.abs(roots).max())
        assert_allclose(chk.max_root_modulus, worst, atol=1e-12)


class TestPsiExpansion:
    def test_zero_lags_give_zero_matrices(self, w22):
        spec = pa.ModelSpec(W=w22, p=1, q=0, h=0, density=pa.normal())
        psis = pa.psi_expansion(spec, pa.ParameterVector(0.3, [0.0], [], [], []), 4)
        assert_allclose(psis[0], np.eye(4))
        for P in psis[1:]:
            assert_allclose(P, 0.0)

    def test_p1_powers(self, w22):
        spec = pa.ModelSpec(W=w22, p=1, q=0, h=0, density=pa.normal())
        theta = pa.ParameterVector(0.4, [-0.3], [], [], [])
        psis = pa.psi_expansion(spec, theta, 3)
        A0 = np.eye(4) - 0.4 * w22.W.toarray()
        B = np.linalg.solve(A0, -0.3 * w22.W.toarray())
        assert_allclose(psis[1], B, atol=1e-12)
        assert_allclose(psis[2], B @ B, atol=1e-12)
        assert_allclose(psis[3], B @ B @ B, atol=1e-12)

    def test_geometric_decay_benchmark_design(self, w33):
        spec = model1_spec(w33)
        psis = pa.psi_expansion(spec, model1_theta(), 20)
        norms = [np.max(np.abs(P).sum(axis=1)) for P in psis]
        assert norms[20] < 1e-3
        assert norms[20] < norms[10] < norms[5]

    def test_noncausal_rejected(self):
        W = pa.from_adjacency([(0, 1)], 2)
        spec = pa.ModelSpec(W=W, p=1, q=0, h=0, density=pa.normal())
        with pytest.raises(ValueError, match="non-causal"):
            pa.psi_expansion(spec, pa.ParameterVector(0.0, [1.5], [], [], []), 5)

    def test_p2_recursion_matches_manual(self, w22):
        spec = pa.ModelSpec(W=w22, p=2, q=0, h=0, density=pa.normal())
        theta = pa.ParameterVector(0.3, [0.25, -0.15], [], [], [])
        psis = pa.psi_expansion(spec, theta, 2)
        Wd = w22.W.toarray()
        A0 = np.eye(4) - 0.3 * Wd
        B1 = np.linalg.solve(A0, 0.25 * Wd)
        B2 = np.linalg.solve(A0, -0.15 * Wd)
        assert_allclose(psis[2], B1 @ B1 + B2, atol=1e-12)


class TestCanonicalize:
    def test_idempotent_on_canonical(self):
        theta = pa.ParameterVector(0.2, [0.1], [1.0, 0.5], [2.0, 0.8],
                                   [[0.75, 0.7], [0.35, -1.0]])
        out = pa.canonicalize(theta, include_intercept=True)
        assert_allclose(out.to_array(), theta.to_array(), atol=1e-15)

    def test_sorts_by_lambda_descending(self):
        theta = pa.ParameterVector(0.0, [0.0], [0.0, 0.0], [0.8, 2.0],
                                   [[0.3, 0.1], [0.7, -0.2]])
        out = pa.canonicalize(theta, include_intercept=True)
        assert_allclose(out.lam, [2.0, 0.8])
        assert_allclose(out.gamma, [[0.7, -0.2], [0.3, 0.1]])

    def test_sign_flip_with_intercept_shift(self):
        theta = pa.ParameterVector(0.0, [], [0.2, 0.0], [1.5], [[-0.75, 0.35]])
        out = pa.canonicalize(theta, include_intercept=True)
        assert_allclose(out.lam, [-1.5])
        assert_allclose(out.gamma, [[0.75, -0.35]])
        assert_allclose(out.beta, [1.7, 0.0])

    def test_flip_preserves_residuals(self, w33):
        rng = np.random.default_rng(8)
        spec = pa.ModelSpec(W=w33, p=1, q=3, h=2, density=pa.normal(),
                            include_intercept=True)
        for _ in range(10):
            theta = random_causal_theta(spec, rng)
            theta.gamma[0] = -theta.gamma[0]  # force one flip
            data = random_panel(spec, 3, rng)
            data.X[:, :, 0] = 1.0
            out = pa.canonicalize(theta, include_intercept=True)
            assert out.is_canonical()
            E0 = pa.residual_matrix(spec, theta, data)
            E1 = pa.residual_matrix(spec, out, data)
            assert np.max(np.abs(E0 - E1)) < 1e-12

    def test_error_without_intercept(self):
        theta = pa.ParameterVector(0.0, [], [], [1.5], [[-0.75, 0.35]])
        with pytest.raises(ValueError, match="intercept"):
            pa.canonicalize(theta, include_intercept=False)

    def test_degenerate_neuron_warns(self):
        theta = pa.ParameterVector(0.0, [], [0.1], [0.0], [[0.5]])
        with pytest.warns(RuntimeWarning, match="degenerate"):
            pa.canonicalize(theta, include_intercept=True)

    def test_h0_passthrough(self):
        theta = pa.ParameterVector(0.3, [0.1], [1.0], [], [])
        out = pa.canonicalize(theta, include_intercept=False)
        assert_allclose(out.to_array(), theta.to_array())


class TestParameterVector:
    def test_array_round_trip(self, w33):
        spec = pa.ModelSpec(W=w33, p=2, q=3, h=2, density=pa.normal())
        rng = np.random.default_rng(2)
        theta = random_causal_theta(spec, rng)
        back = pa.ParameterVector.from_array(theta.to_array(), spec)
        assert_allclose(back.to_array(), theta.to_array())
        assert back.gamma.shape == (2, 3)

    def test_layout_order(self, w33):
        spec = pa.ModelSpec(W=w33, p=1, q=2, h=2, density=pa.normal())
        theta = pa.ParameterVector(0.1, [0.2], [0.3, 0.4], [0.5, 0.6],
                                   [[0.7, 0.8], [0.9, 1.0]])
        assert_allclose(theta.to_array(),
                        [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0])
        assert spec.dim == theta.dim == 10

    def test_json_round_trip(self, tmp_path):
        theta = pa.ParameterVector(0.6, [-0.274], [], [1.5], [[0.75, -0.35]])
        path = tmp_path / "theta.json"
        theta.save_json(path)
        back = pa.ParameterVector.load_json(path)
        assert_allclose(back.to_array(), theta.to_array())
        assert back.gamma.shape == (1, 2)

    def test_wrong_length_rejected(self, w33):
        spec = pa.ModelSpec(W=w33, p=1, q=2, h=1, density=pa.normal())
        with pytest.raises(ValueError, match="length"):
            pa.ParameterVector.from_array(np.zeros(3), spec)

    def test_param_names(self, w33):
        spec = pa.ModelSpec(W=w33, p=1, q=2, h=2, density=pa.normal())
        assert pa.param_names(spec) == [
            "phi0", "phi1", "beta1", "beta2", "lambda1", "lambda2",
            "gamma11", "gamma12", "gamma21", "gamma22",
        ]
        spec_nolin = pa.ModelSpec(W=w33, p=1, q=2, h=1, density=pa.normal(),
                                  linear_term=False)
        assert pa.param_names(spec_nolin) == [
            "phi0", "phi1", "lambda1", "gamma11", "gamma12",
        ]


class TestPanelData:
    def test_shape_validation(self):
        with pytest.raises(ValueError, match="slices"):
            pa.PanelData(Y=np.zeros((3, 4)), X=np.zeros((3, 4, 1)), p=1)
        with pytest.raises(ValueError, match="locations"):
            pa.PanelData(Y=np.zeros((3, 4)), X=np.zeros((2, 5, 1)), p=1)

    def test_nonfinite_rejected(self):
        Y = np.zeros((2, 4))
        Y[0, 0] = np.nan
        with pytest.raises(ValueError, match="finite"):
            pa.PanelData(Y=Y, X=np.zeros((2, 4, 0)), p=0)

    def test_intercept_declared_but_missing(self, w22):
        spec = pa.ModelSpec(W=w22, p=0, q=2, h=1, density=pa.normal(),
                            include_intercept=True)
        data = random_panel(spec, 2, np.random.default_rng(0))
        with pytest.raises(ValueError, match="intercept"):
            data.check_against(spec)

    def test_rank_deficiency_detected(self, w22):
        spec = pa.ModelSpec(W=w22, p=0, q=2, h=1, density=pa.normal())
        X = np.zeros((1, 4, 2))
        X[:, :, 0] = 1.0
        X[:, :, 1] = 2.0  # collinear with column 0
        data = pa.PanelData(Y=np.zeros((1, 4)), X=X, p=0)
        with pytest.raises(ValueError, match="rank"):
            data.check_against(spec)

    def test_model_spec_dim_formula(self, w22):
        spec = pa.ModelSpec(W=w22, p=2, q=3, h=2, density=pa.normal())
        assert spec.dim == (2 + 1) + 3 + 2 + 2 * 3
        spec2 = pa.ModelSpec(W=w22, p=1, q=2, h=1, density=pa.normal(),
                             linear_term=False)
        assert spec2.dim == 2 + 0 + 1 + 2
