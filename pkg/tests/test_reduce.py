import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from smallp.baselines import imhof
from smallp.ce import combine_disjoint, mcmc_ce
from smallp.errors import ConfigError
from smallp.model import ChainConfig
from smallp.reduce import pooled_moments, quadform_from_matrices, quadform_problem, ratio_to_linear


def test_identity_features_scaled():
    lam, q = quadform_from_matrices(np.eye(2), [1.0, 0.0], scale_by_n=True)
    np.testing.assert_allclose(lam, [0.5, 0.5])
    assert q == pytest.approx(0.5)


def test_identity_features_unscaled():
    lam, q = quadform_from_matrices(np.eye(2), [1.0, 0.0])
    np.testing.assert_allclose(lam, [1.0, 1.0])
    assert q == pytest.approx(1.0)


def test_constant_weights_scale_everything(rng):
    z = rng.standard_normal((7, 3))
    r = rng.standard_normal(7)
    lam1, q1 = quadform_from_matrices(z, r)
    lam3, q3 = quadform_from_matrices(z, r, weights=[3.0, 3.0, 3.0])
    np.testing.assert_allclose(lam3, 3 * lam1, rtol=1e-12)
    assert q3 == pytest.approx(3 * q1, rel=1e-12)


def test_zero_column_is_dropped(rng):
    z = rng.standard_normal((6, 3))
    z[:, 1] = 0.0
    lam, _ = quadform_from_matrices(z, rng.standard_normal(6))
    assert lam.size == 2


def test_wide_features_use_small_gram(rng):
    z = rng.standard_normal((3, 8))
    lam, _ = quadform_from_matrices(z, rng.standard_normal(3))
    np.testing.assert_allclose(lam, np.sort(np.linalg.eigvalsh(z @ z.T))[::-1], rtol=1e-10)


def test_degenerate_statistic():
    with pytest.raises(ConfigError, match="degenerate"):
        quadform_from_matrices(np.zeros((4, 2)), np.ones(4))


@pytest.mark.parametrize("kw", [dict(residual=np.ones(3)), dict(residual=np.ones(4), weights=[1.0, -1.0])])
def test_bad_shapes_and_weights(kw):
    with pytest.raises(ConfigError):
        quadform_from_matrices(np.ones((4, 2)), **kw)


@settings(max_examples=40, deadline=None)
@given(
    z=arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 6)),
             elements=st.floats(-5, 5, allow_nan=False)),
)
def test_eigenvalues_positive_sorted_and_match_trace(z):
    r = np.ones(z.shape[0])
    if not np.any(np.abs(z) > 1e-3):
        return
    lam, q = quadform_from_matrices(z, r)
    assert np.all(lam > 0)
    assert np.all(np.diff(lam) <= 0)
    assert lam.sum() == pytest.approx(float(np.sum(z * z)), rel=1e-9)
    assert q >= 0


def test_reduction_matches_direct_simulation(rng):
    """Tail of r'ZWZ'r by brute force on r agrees with the reduced problem."""
    n, k = 6, 4
    z = rng.standard_normal((n, k))
    w = rng.uniform(0.5, 2.0, k)
    lam, _ = quadform_from_matrices(z, np.zeros(n), w)
    m = 400_000
    r = rng.standard_normal((m, n))
    proj = r @ z
    stat = (proj * proj) @ w
    q = float(np.quantile(stat, 1 - 1e-2))
    p_direct = np.mean(stat >= q)
    se_direct = math.sqrt(p_direct * (1 - p_direct) / m)
    p_imhof = imhof(lam, q)
    assert abs(p_imhof - p_direct) < 3 * se_direct
    est = mcmc_ce(quadform_problem(lam, q), ChainConfig(n_samples=5000, seed=3), 20_000)
    se = math.hypot(se_direct, est.rel_se * est.p)
    assert abs(est.p - p_direct) < 3 * se


# -- ratio ---------------------------------------------------------------------------


def test_ratio_constraint_for_unit_threshold():
    (first, second) = ratio_to_linear(1.0, 1, 1)
    np.testing.assert_array_equal(first.constraint.c_matrix, [[0.0, 1.0], [1.0, -1.0]])
    np.testing.assert_array_equal(second.constraint.c_matrix, [[0.0, -1.0], [-1.0, 1.0]])


@pytest.mark.parametrize("q", [-3.0, 0.0, 0.5, 40.0, 1e8])
@pytest.mark.parametrize("mu", [0.0, 2.5, -1.0])
def test_ratio_feasible_points_are_inside(q, mu):
    for prob in ratio_to_linear(q, 3, 5, mu, 2.0):
        assert prob.contains(np.asarray(prob.constraint.feasible_point)[None, :])[0]


def test_ratio_group_variances():
    (prob, _) = ratio_to_linear(2.0, 4, 9, mu=1.0, sigma=3.0)
    np.testing.assert_allclose(prob.theta0.cov, np.diag([9 / 4, 1.0]))
    np.testing.assert_allclose(prob.theta0.mean, [1.0, 1.0])


def test_cauchy_tail_through_ratio():
    # with mu = 0 the ratio of two standard normals is standard Cauchy
    q = math.tan(math.pi * (0.5 - 1e-6))
    parts = [mcmc_ce(p, ChainConfig(seed=s), 10_000) for s, p in enumerate(ratio_to_linear(q, 1, 1))]
    est = combine_disjoint(parts)
    assert est.p == pytest.approx(1e-6, rel=0.03)


def test_one_orthant_only():
    assert len(ratio_to_linear(2.0, 1, 1, two_sided_orthants=False)) == 1


@pytest.mark.parametrize("bad", [dict(q_ratio=math.inf), dict(sigma=0.0), dict(n1=0)])
def test_ratio_rejects_bad_input(bad):
    kw = dict(q_ratio=1.0, n1=1, n2=1, sigma=1.0) | bad
    with pytest.raises(ConfigError):
        ratio_to_linear(**kw)


def test_pooled_moments():
    mu, sigma = pooled_moments([1.0, 2.0, 3.0], [5.0, 7.0])
    assert mu == pytest.approx(3.6)
    assert sigma == pytest.approx(math.sqrt((2.0 + 2.0) / 3))
    with pytest.raises(ConfigError):
        pooled_moments([1.0], [1.0])
