import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import batch_means_se
from smallp.errors import SamplerError
from smallp.model import ChainConfig, LinearSystem, MvnParams, QuadExterior, TailProblem
from smallp.samplers import (
    _first_exit_trig,
    _trig_eval,
    gibbs_conditional_support,
    gibbs_step,
    hit_and_run_step,
    hmc_step,
    hmc_trajectory,
    line_feasible_set,
    run_chain,
)
from smallp.specialfn import log_normal_sf

SAMPLERS = ["gibbs", "hit_and_run", "hmc"]


def mills(a):
    return math.exp(-0.5 * a * a - 0.5 * math.log(2 * math.pi) - log_normal_sf(a))


def half_plane(mean=0.0):
    return TailProblem(MvnParams([mean], [[1.0]]), LinearSystem([[1.0]], feasible_point=[1.0]))


# -- conditional supports and line sets -------------------------------------------


def test_gibbs_support_half_line():
    assert gibbs_conditional_support(half_plane(), [0.7], 0) == (0.0, math.inf, False)


def test_gibbs_support_quadratic_examples():
    prob = TailProblem.quadratic([1.0, 1.0], 4.0)
    assert gibbs_conditional_support(prob, [0.0, 3.0], 0) == (-math.inf, math.inf, False)
    lo, hi, outside = gibbs_conditional_support(prob, [2.5, 0.0], 1)
    assert (lo, hi, outside) == (-math.inf, math.inf, False)
    lo, hi, outside = gibbs_conditional_support(prob, [2.5, 0.0], 0)
    assert outside and lo == pytest.approx(-2.0) and hi == pytest.approx(2.0)


def test_line_set_linear():
    prob = TailProblem(MvnParams.standard(2), LinearSystem([[1.0, 0.0]], feasible_point=[1.0, 0.0]))
    assert line_feasible_set(prob, [1.0, 0.0], [1.0, 0.0]) == (-1.0, math.inf, False)


def test_line_set_quadratic():
    prob = TailProblem.quadratic([1.0, 1.0], 4.0)
    lo, hi, outside = line_feasible_set(prob, [3.0, 0.0], [1.0, 0.0])
    assert outside and lo == pytest.approx(-5.0) and hi == pytest.approx(-1.0)
    assert line_feasible_set(prob, [0.0, 3.0], [1.0, 0.0]) == (-math.inf, math.inf, False)


# -- exact HMC trajectories ----------------------------------------------------------


def test_free_trajectory_quarter_turn():
    prob = TailProblem(MvnParams.standard(2), LinearSystem([[1.0, 0.0]], feasible_point=[1.0, 0.0]))
    # the wall z1 = 0 is reached exactly at pi/2, so stop just short of it
    z, p, n_ref = hmc_trajectory(prob, [1.0, 0.0], [0.0, 1.0], math.pi / 2 - 1e-9)
    np.testing.assert_allclose(z, [0.0, 1.0], atol=1e-8)
    assert n_ref == 0
    far = TailProblem(MvnParams.standard(2), LinearSystem([[1.0, 0.0], [0.0, 1.0]], feasible_point=[1.0, 0.5]))
    far = TailProblem(MvnParams([5.0, 5.0], np.eye(2)), far.constraint)
    z, p, n_ref = hmc_trajectory(far, [1.0, 0.0], [0.0, 1.0], math.pi / 2)
    np.testing.assert_allclose(z, [0.0, 1.0], atol=1e-15)
    np.testing.assert_allclose(p, [-1.0, 0.0], atol=1e-15)
    assert n_ref == 0


def test_one_dimensional_wall_bounce():
    z, p, n_ref = hmc_trajectory(half_plane(), [1.0], [0.0], math.pi / 2 + 0.5)
    assert n_ref == 1
    assert z[0] == pytest.approx(math.sin(0.5), abs=1e-12)
    assert p[0] == pytest.approx(math.cos(0.5), abs=1e-12)


def _energy(z, p):
    return float(z @ z + p @ p)


@pytest.mark.parametrize(
    "problem",
    [
        TailProblem.quadratic([1.0, 1.0], 25.0),
        TailProblem.quadratic([3.0, 1.0, 0.5], 40.0),
        TailProblem(MvnParams([0.4, -0.2], [[1.0, 0.6], [0.6, 2.0]]), QuadExterior([1.0, 2.0], 30.0)),
        TailProblem(MvnParams.standard(2), LinearSystem([[0.0, 1.0], [1.0, -2.0]], feasible_point=[3.0, 1.0])),
    ],
)
def test_energy_and_reversibility_across_reflections(problem, rng):
    from smallp.samplers import Geometry

    geo = Geometry.from_problem(problem)
    z0 = geo.to_z(problem.feasible_point)
    total_reflections = 0
    for _ in range(50):
        p0 = rng.standard_normal(problem.dim)
        z1, p1, n_ref = hmc_trajectory(problem, z0, p0, math.pi / 2)
        total_reflections += n_ref
        assert _energy(z1, p1) == pytest.approx(_energy(z0, p0), rel=1e-10)
        z_back, p_back, n_back = hmc_trajectory(problem, z1, -p1, math.pi / 2)
        assert n_back == n_ref
        np.testing.assert_allclose(z_back, z0, atol=1e-8)
        np.testing.assert_allclose(-p_back, p0, atol=1e-8)
        z0 = z1
    assert total_reflections > 0


def test_free_segment_reversible_to_1e10(rng):
    prob = TailProblem(MvnParams([50.0, 50.0], np.eye(2)), LinearSystem([[1.0, 0.0], [0.0, 1.0]], feasible_point=[50.0, 50.0]))
    for _ in range(20):
        z0, p0 = rng.standard_normal(2), rng.standard_normal(2)
        t = rng.uniform(0.1, 3.0)
        z1, p1, n_ref = hmc_trajectory(prob, z0, p0, t)
        assert n_ref == 0
        z2, p2, _ = hmc_trajectory(prob, z1, -p1, t)
        np.testing.assert_allclose(z2, z0, atol=1e-10)
        np.testing.assert_allclose(-p2, p0, atol=1e-10)
        assert _energy(z1, p1) == pytest.approx(_energy(z0, p0), rel=1e-12)


@settings(max_examples=200, deadline=None)
@given(
    st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5),
    st.floats(0.05, 2 * math.pi),
)
def test_trig_root_search_finds_the_earliest_exit(a0, a1, b1, a2, b2, t_max):
    h0 = a0 + a1 + a2
    if h0 < 0:
        a0 -= h0 - 1e-3
    t = _first_exit_trig(a0, a1, b1, a2, b2, t_max)
    grid = np.linspace(0.0, t_max, 20001)
    vals = a0 + a1 * np.cos(grid) + b1 * np.sin(grid) + a2 * np.cos(2 * grid) + b2 * np.sin(2 * grid)
    if t == math.inf:
        assert vals.min() >= -1e-9
    else:
        assert 0 <= t <= t_max
        assert _trig_eval(t, a0, a1, b1, a2, b2) >= -1e-9
        # nothing on the grid before t is clearly outside
        assert vals[grid < t - 1e-6].min(initial=0.0) >= -1e-6
        # and the curve does go negative just after t
        assert min(_trig_eval(t + s, a0, a1, b1, a2, b2) for s in (1e-9, 1e-8, 1e-7, 1e-6)) < 1e-6


# -- chains -----------------------------------------------------------------------------


@pytest.mark.parametrize("sampler", SAMPLERS)
def test_quadratic_membership_example(sampler):
    prob = TailProblem.quadratic([1.0, 1.0], 9.0)
    y = run_chain(prob, ChainConfig(n_samples=10_000, sampler=sampler, seed=3))
    assert y.shape == (10_000, 2)
    assert np.all(y[:, 0] ** 2 + y[:, 1] ** 2 >= 9.0)


@pytest.mark.parametrize("sampler", SAMPLERS)
def test_half_normal_mean(sampler):
    y = run_chain(half_plane(), ChainConfig(n_samples=100_000, sampler=sampler, seed=11))[:, 0]
    assert np.all(y > 0)
    assert abs(y.mean() - math.sqrt(2 / math.pi)) < 4 * batch_means_se(y)
    assert abs(y.var() - (1 - 2 / math.pi)) < 4 * batch_means_se((y - y.mean()) ** 2)


@pytest.mark.parametrize("sampler", SAMPLERS)
def test_shifted_tail_moments(sampler):
    # N(-3, 1) restricted to y > 0 is a standard normal restricted to [3, inf), shifted
    y = run_chain(half_plane(-3.0), ChainConfig(n_samples=100_000, sampler=sampler, seed=12))[:, 0] + 3.0
    m = mills(3.0)
    var = 1 + 3.0 * m - m * m
    assert abs(y.mean() - m) < 4 * batch_means_se(y)
    assert abs(y.var() - var) < 4 * batch_means_se((y - y.mean()) ** 2)


@pytest.mark.parametrize("sampler", SAMPLERS)
def test_two_tail_moments(sampler):
    prob = TailProblem.quadratic([1.0], 4.0)
    y = run_chain(prob, ChainConfig(n_samples=100_000, sampler=sampler, seed=13))[:, 0]
    assert np.all(np.abs(y) >= 2.0)
    # HMC relies on its sign-flip move to visit both half-lines
    assert abs(y.mean()) < 4 * batch_means_se(y)
    a = np.abs(y)
    assert abs(a.mean() - mills(2.0)) < 4 * batch_means_se(a)
    assert abs((y * y).mean() - (1 + 2.0 * mills(2.0))) < 4 * batch_means_se(y * y)


def _rejection(problem, n, rng):
    out = []
    while sum(len(o) for o in out) < n:
        y = problem.theta0.sample(200_000, rng)
        out.append(y[problem.contains(y)])
    return np.concatenate(out)[:n]


@pytest.mark.parametrize("sampler", SAMPLERS)
@pytest.mark.parametrize("kind", ["linear", "quad"])
def test_correlated_base_matches_rejection_sampling(sampler, kind, rng):
    theta = MvnParams([0.5, -0.3], [[1.0, 0.6], [0.6, 2.0]])
    if kind == "linear":
        con = LinearSystem([[1.0, 1.0], [1.0, -0.5]], feasible_point=[2.0, 0.5])
    else:
        con = QuadExterior([1.0, 0.5], 6.0)
    prob = TailProblem(theta, con)
    y = run_chain(prob, ChainConfig(n_samples=60_000, sampler=sampler, seed=21))
    ref = _rejection(prob, 60_000, rng)
    for j in range(2):
        for f in (lambda v: v, lambda v: v * v):
            a, b = f(y[:, j]), f(ref[:, j])
            se = math.hypot(batch_means_se(a), b.std() / math.sqrt(b.size))
            assert abs(a.mean() - b.mean()) < 4 * se


@pytest.mark.slow
@pytest.mark.parametrize("sampler", SAMPLERS)
def test_membership_over_a_million_draws(sampler):
    quad = TailProblem.quadratic([3.0, 1.0, 0.5], 60.0)
    y = run_chain(quad, ChainConfig(n_samples=1_000_000, burn_in=0, sampler=sampler, seed=1))
    assert np.all(quad.contains(y))
    assert np.all((y * y) @ np.array([3.0, 1.0, 0.5]) >= 60.0 * (1 - 1e-12))
    cone = TailProblem(MvnParams.standard(2), LinearSystem([[0.0, 1.0], [1.0, -3.0]], feasible_point=[4.0, 1.0]))
    y = run_chain(cone, ChainConfig(n_samples=1_000_000, burn_in=0, sampler=sampler, seed=2))
    assert np.all(y[:, 1] > 0) and np.all(y[:, 0] - 3.0 * y[:, 1] > 0)


def test_gibbs_in_a_needle_thin_wedge():
    q = 1e100
    prob = TailProblem(MvnParams.standard(2), LinearSystem([[0.0, 1.0], [1.0, -q]], feasible_point=[1.0, 0.5 / q]))
    y = run_chain(prob, ChainConfig(n_samples=1_000_000, burn_in=0, sampler="gibbs", seed=4))
    assert np.all(y[:, 1] > 0) and np.all(y[:, 0] - q * y[:, 1] > 0)
    # y1 has the Rayleigh law r * exp(-r^2 / 2) and y2 q / y1 is uniform
    assert abs(y[:, 0].mean() - math.sqrt(math.pi / 2)) < 4 * batch_means_se(y[:, 0])
    u = y[:, 1] * q / y[:, 0]
    assert abs(u.mean() - 0.5) < 4 * batch_means_se(u)


@pytest.mark.parametrize("sampler", SAMPLERS)
def test_determinism(sampler):
    prob = TailProblem.quadratic([1.0, 2.0, 0.5], 30.0)
    cfg = ChainConfig(n_samples=2000, burn_in=100, sampler=sampler, seed=99)
    a = run_chain(prob, cfg)
    b = run_chain(prob, cfg)
    assert np.array_equal(a, b)
    c = run_chain(prob, ChainConfig(n_samples=2000, burn_in=100, sampler=sampler, seed=100))
    assert not np.array_equal(a, c)


def test_single_steps_stay_inside(rng):
    prob = TailProblem.quadratic([1.0, 1.0], 4.0)
    y = prob.feasible_point
    for step in (gibbs_step, hit_and_run_step, hmc_step):
        for _ in range(20):
            y = step(y, prob, rng)
            assert prob.contains(y)


def test_infeasible_start_rejected(rng):
    prob = TailProblem.quadratic([1.0, 1.0], 4.0)
    with pytest.raises(SamplerError):
        gibbs_step([0.0, 0.0], prob, rng)


def test_hmc_info_reports_reflections():
    prob = TailProblem.quadratic([1.0, 1.0], 100.0)
    y, info = run_chain(prob, ChainConfig(n_samples=500, burn_in=0, sampler="hmc"), return_info=True)
    assert info["sampler"] == "hmc"
    assert info["reflections"] > 0
