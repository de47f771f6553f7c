import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from riesz_compare.basis import FeatureBuilder, build_features
from riesz_compare.data import AteDgpConfig, Dataset, generate_ate_dgp
from riesz_compare.errors import ConfigurationError, FunctionalMismatchError
from riesz_compare.functional import FunctionalSpec, basis_moments, function_moment

ATE = FunctionalSpec.ate()
SHIFT = FunctionalSpec.shift_mean()


def test_ate_moments_for_one_t_w(ate_data):
    # poly-t:1 on p covariates has columns (1, t, w1, t*w1, ...); pick (1, t, w1).
    m = basis_moments(ate_data, ATE, FeatureBuilder.polynomial_with_treatment(1)).values
    np.testing.assert_allclose(m[[0, 1, 2]], [0.0, 1.0, 0.0], atol=1e-15)


def test_ate_moment_of_interaction_is_mean_w(ate_data):
    m = basis_moments(ate_data, ATE, FeatureBuilder.polynomial_with_treatment(1)).values
    np.testing.assert_allclose(m[3], ate_data.covariates[:, 0].mean(), atol=1e-15)


def test_shift_moment_is_target_mean():
    data = Dataset(covariates=[[0.0], [1.0]], aux_sample=[[2.0], [4.0]])
    m = basis_moments(data, SHIFT, FeatureBuilder.polynomial(1))
    np.testing.assert_allclose(m.values, [1.0, 3.0])
    assert m.sample_size == 2
    assert function_moment(data, SHIFT, lambda x, t: x[:, 0]) == 3.0


def test_constant_function_has_zero_ate(ate_data):
    assert function_moment(ate_data, ATE, lambda w, t: np.ones(w.shape[0])) == 0.0


def test_functional_mismatch(ate_data, shift_data):
    with pytest.raises(FunctionalMismatchError):
        basis_moments(shift_data, ATE, FeatureBuilder.polynomial(1))
    with pytest.raises(FunctionalMismatchError):
        function_moment(ate_data, SHIFT, lambda w, t: w[:, 0])
    with pytest.raises(ConfigurationError):
        FunctionalSpec("average-derivative")


def _linear_function(builder, theta):
    return lambda cov, t: builder.transform(cov, t) @ theta


@pytest.mark.parametrize("basis", ["poly-t:2", "rff:15,1.0"])
def test_linear_function_matches_basis_moments(ate_data, rng, basis):
    b = FeatureBuilder.parse(basis)
    theta = rng.standard_normal(b.dimension(ate_data.p))
    m = basis_moments(ate_data, ATE, b).values
    assert function_moment(ate_data, ATE, _linear_function(b, theta)) == pytest.approx(theta @ m, abs=1e-12)


def test_basis_moments_stack_function_moments(shift_data):
    b = FeatureBuilder.polynomial(3)
    m = basis_moments(shift_data, SHIFT, b).values
    d = b.dimension(shift_data.p)
    stacked = [function_moment(shift_data, SHIFT, _linear_function(b, np.eye(d)[j])) for j in range(d)]
    np.testing.assert_allclose(m, stacked, rtol=0, atol=1e-12)


def test_standardized_basis_uses_frozen_map(ate_data):
    fm = build_features(ate_data, FeatureBuilder("poly-t", degree=1, standardize=True))
    m = basis_moments(ate_data, ATE, fm).values
    # z-scored t column: (1 - mu)/sd - (0 - mu)/sd = 1/sd
    assert m[1] == pytest.approx(1.0 / fm.builder.scale[1], rel=1e-12)


LINEARITY_DATA = generate_ate_dgp(AteDgpConfig(n=100, seed=8))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), a=st.floats(-5, 5), b=st.floats(-5, 5))
def test_linearity(seed, a, b):
    ate_data = LINEARITY_DATA
    rng = np.random.default_rng(seed)
    builder = FeatureBuilder.polynomial_with_treatment(2)
    d = builder.dimension(ate_data.p)
    f = _linear_function(builder, rng.standard_normal(d))
    g = _linear_function(builder, rng.standard_normal(d))
    combo = lambda cov, t: a * f(cov, t) + b * g(cov, t)
    lhs = function_moment(ate_data, ATE, combo)
    rhs = a * function_moment(ate_data, ATE, f) + b * function_moment(ate_data, ATE, g)
    assert lhs == pytest.approx(rhs, abs=1e-10)
