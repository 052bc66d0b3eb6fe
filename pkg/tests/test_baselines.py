import math

import numpy as np
import pytest
from hypothesis import example, given, settings
from hypothesis import strategies as st

from smallp.baselines import brute_force_quadform, brute_force_two_sided_ratio, imhof, imhof_estimate
from smallp.errors import ConfigError
from smallp.model import Method
from smallp.specialfn import chisq_sf_inv, log_chisq_sf


def test_imhof_chisq2():
    assert imhof([1.0, 1.0], 2 * math.log(10)) == pytest.approx(0.1, abs=1e-6)


def test_imhof_chisq5_small():
    q = chisq_sf_inv(5, math.log(1e-4))
    assert imhof(np.ones(5), q) == pytest.approx(1e-4, rel=0.01)


@settings(max_examples=25, deadline=None)
@given(df=st.integers(1, 12), x=st.floats(0.05, 40.0))
@example(df=6, x=0.9957847303456776)  # low-frequency tail that needs a later split point
def test_imhof_agrees_with_chisq(df, x):
    assert imhof(np.ones(df), x) == pytest.approx(math.exp(log_chisq_sf(df, x)), abs=1e-6)


def test_imhof_weighted_matches_simulation(rng):
    lam = np.array([3.0, 1.0, 0.25])
    est = brute_force_quadform(lam, 9.0, 1_000_000, rng)
    assert abs(imhof(lam, 9.0) - est.p) < 3 * est.rel_se * est.p


def test_imhof_cannot_resolve_extreme_tails():
    """The linear-space inversion loses everything below the cancellation floor."""
    q = chisq_sf_inv(5, math.log(1e-20))
    est = imhof_estimate(np.ones(5), q)
    assert not (est.p > 0 and abs(est.p / 1e-20 - 1) < 1e-2)


def test_imhof_estimate_fields():
    est = imhof_estimate([1.0, 1.0], 2 * math.log(10))
    assert est.method is Method.IMHOF and est.status == "ok"
    assert est.log10_p == pytest.approx(-1.0, abs=1e-6)


@pytest.mark.parametrize("lam,q", [([1.0, -1.0], 1.0), ([1.0], 0.0), ([1.0], math.inf)])
def test_imhof_rejects_bad_input(lam, q):
    with pytest.raises(ConfigError):
        imhof(lam, q)


def test_ratio_at_one_is_half(rng):
    est = brute_force_two_sided_ratio(1.0, 1, 1, 0.0, 1.0, 200_000, rng)
    # Pr[Y1/Y2 >= 1] = 1/4 for the standard Cauchy, so the two-sided value is 1/2
    assert est.p == pytest.approx(0.5, abs=3 * math.sqrt(0.25 * 0.75 / 200_000) * 2)


def test_ratio_at_median_caps_at_one(rng):
    est = brute_force_two_sided_ratio(0.0, 1, 1, 0.0, 1.0, 100_000, rng)
    assert est.p == pytest.approx(1.0, abs=0.01)


def test_ratio_small_target(rng):
    q = math.tan(math.pi * (0.5 - 5e-4))  # two-sided 1e-3
    est = brute_force_two_sided_ratio(q, 1, 1, 0.0, 1.0, 1_000_000, rng)
    assert abs(est.p - 1e-3) < 3 * est.rel_se * est.p


def test_brute_force_deterministic():
    a = brute_force_two_sided_ratio(3.0, 2, 3, 1.0, 1.0, 10_000, np.random.default_rng(4))
    b = brute_force_two_sided_ratio(3.0, 2, 3, 1.0, 1.0, 10_000, np.random.default_rng(4))
    assert a == b
    c = brute_force_quadform([1.0, 2.0], 5.0, 70_000, np.random.default_rng(4))
    d = brute_force_quadform([1.0, 2.0], 5.0, 70_000, np.random.default_rng(4))
    assert c == d


def test_brute_force_no_hits(rng):
    est = brute_force_quadform([1.0], 400.0, 1000, rng)
    assert est.log10_p == -math.inf and est.status == "no_hits"
