import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from riesz_compare.basis import FeatureBuilder, build_features
from riesz_compare.data import AteDgpConfig, Dataset, generate_ate_dgp
from riesz_compare.errors import ConfigurationError, ShapeError
from riesz_compare.evaluation import OutcomeFit, fit_outcome_model, plug_in_estimates, rr_mse
from riesz_compare.functional import FunctionalSpec, basis_moments

ATE = FunctionalSpec.ate()


def test_rr_mse_trivial():
    a = np.array([1.0, -2.0, 3.5])
    assert rr_mse(a, a) == 0.0
    assert rr_mse(a + 1, a) == pytest.approx(1.0)


def test_rr_mse_matches_loop(rng):
    p, o = rng.standard_normal(7), rng.standard_normal(7)
    total = 0.0
    for i in range(7):
        total += (p[i] - o[i]) ** 2
    assert rr_mse(p, o) == pytest.approx(total / 7, abs=1e-15)


def test_rr_mse_shape_errors():
    with pytest.raises(ShapeError):
        rr_mse(np.ones(3), np.ones(4))
    with pytest.raises(ShapeError):
        rr_mse(np.ones(0), np.ones(0))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 40))
def test_rr_mse_permutation_invariant(seed, n):
    rng = np.random.default_rng(seed)
    p, o = rng.standard_normal(n), rng.standard_normal(n)
    perm = rng.permutation(n)
    assert rr_mse(p[perm], o[perm]) == pytest.approx(rr_mse(p, o), rel=1e-12, abs=0)


def _noiseless(n=200, seed=0):
    return generate_ate_dgp(AteDgpConfig(n=n, noise_sd=0.0, seed=seed))


def test_outcome_interpolates_linear_truth():
    data = _noiseless()
    features = build_features(data, FeatureBuilder.polynomial_with_treatment(1))
    fit = fit_outcome_model(data, features)
    np.testing.assert_allclose(fit.predict(features), data.outcome, atol=1e-8)


def test_outcome_shrinks_with_large_ridge(ate_data):
    features = build_features(ate_data, FeatureBuilder.polynomial_with_treatment(1))
    base = np.linalg.norm(fit_outcome_model(ate_data, features).theta_h)
    assert np.linalg.norm(fit_outcome_model(ate_data, features, 1e6).theta_h) <= 1e-3 * base


@pytest.mark.parametrize("l2", [0.0, 0.3])
def test_outcome_matches_normal_equations(ate_data, l2):
    features = build_features(ate_data, FeatureBuilder.polynomial_with_treatment(2))
    phi, y, n = features.values, ate_data.outcome, ate_data.n
    A = phi.T @ phi / n + l2 * np.eye(phi.shape[1])
    expected = np.linalg.solve(A, phi.T @ y / n)
    np.testing.assert_allclose(fit_outcome_model(ate_data, features, l2).theta_h, expected, rtol=0, atol=1e-10)


def test_outcome_needs_outcome():
    data = Dataset(covariates=np.zeros((3, 1)), treatment=[0, 1, 0])
    features = build_features(data, FeatureBuilder.polynomial_with_treatment(0))
    with pytest.raises(ConfigurationError):
        fit_outcome_model(data, features)


def test_zero_weights_give_zero_estimate(ate_data):
    report = plug_in_estimates(ate_data, ATE, np.zeros(ate_data.n))
    assert report.weighting_estimate == 0.0
    assert report.dr_estimate is None
    assert report.rr_mse == pytest.approx(np.mean(ate_data.oracle_alpha**2))


def test_dr_with_exact_outcome_model():
    data = _noiseless()
    features = build_features(data, FeatureBuilder.polynomial_with_treatment(1))
    h = fit_outcome_model(data, features)
    plug_in = basis_moments(data, ATE, features).values @ h.theta_h
    rng = np.random.default_rng(0)
    report = plug_in_estimates(data, ATE, rng.standard_normal(data.n), h, features)
    assert report.dr_estimate == pytest.approx(plug_in, abs=1e-8)
    assert plug_in == pytest.approx(1.0, abs=1e-8)


def test_dr_reductions(ate_data, rng):
    features = build_features(ate_data, FeatureBuilder.polynomial_with_treatment(1))
    h = fit_outcome_model(ate_data, features)
    plug_in = float(basis_moments(ate_data, ATE, features).values @ h.theta_h)
    assert plug_in_estimates(ate_data, ATE, np.zeros(ate_data.n), h, features).dr_estimate == plug_in
    alpha = rng.standard_normal(ate_data.n)
    zero_h = OutcomeFit(np.zeros(features.d), 0.0)
    report = plug_in_estimates(ate_data, ATE, alpha, zero_h, features)
    assert report.dr_estimate == report.weighting_estimate


def test_oracle_weights_recover_ate():
    data = generate_ate_dgp(AteDgpConfig(n=5000, noise_sd=0.0, seed=12))
    report = plug_in_estimates(data, ATE, data.oracle_alpha)
    contrib = data.oracle_alpha * data.outcome
    se = contrib.std(ddof=1) / np.sqrt(data.n)
    assert abs(report.weighting_estimate - 1.0) <= 3 * se
    assert report.rr_mse == 0.0


def test_estimates_validate_inputs(ate_data):
    with pytest.raises(ShapeError):
        plug_in_estimates(ate_data, ATE, np.zeros(3))
    with pytest.raises(ConfigurationError):
        plug_in_estimates(Dataset(covariates=np.zeros((2, 1)), treatment=[0, 1]), ATE, np.zeros(2))
