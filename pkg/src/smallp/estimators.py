"""scikit-learn style wrappers around the functional API.

``GaussianProposal`` is an ordinary density estimator on data matrices. The
two tail estimators take a :class:`~smallp.model.TailProblem` in ``fit``
instead of a data matrix, because what they learn is a proposal for a known
distribution rather than a model of observed data.
"""

from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator, DensityMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .ce import fit_mle, mcmc_ce, multilevel_ce
from .model import ChainConfig, TailEstimate, TailProblem, log_density


def _generator(random_state) -> np.random.Generator:
    if isinstance(random_state, np.random.Generator):
        return random_state
    return np.random.default_rng(random_state)


class GaussianProposal(DensityMixin, BaseEstimator):
    """Maximum-likelihood multivariate normal with a small relative ridge.

    Attributes
    ----------
    mean_ : ndarray of shape (d,)
    covariance_ : ndarray of shape (d, d)
    params_ : MvnParams
    """

    def fit(self, X, y=None, sample_weight=None):
        X = check_array(X, ensure_min_samples=2)
        self.params_ = fit_mle(X, sample_weight)
        self.mean_ = np.array(self.params_.mean)
        self.covariance_ = np.array(self.params_.cov)
        self.n_features_in_ = X.shape[1]
        return self

    def score_samples(self, X):
        check_is_fitted(self, "params_")
        X = check_array(X)
        return np.atleast_1d(log_density(self.params_, X))

    def score(self, X, y=None):
        """Total log-likelihood of ``X``."""
        return float(np.sum(self.score_samples(X)))

    def sample(self, n_samples=1, random_state=None):
        check_is_fitted(self, "params_")
        return self.params_.sample(n_samples, _generator(random_state))


class _TailEstimatorMixin:
    def _store(self, est: TailEstimate):
        self.estimate_ = est
        self.log10_p_ = est.log10_p
        self.p_ = est.p
        self.rel_se_ = est.rel_se
        self.proposal_ = est.diagnostics.get("theta_hat")
        return self

    def predict_log10_p(self):
        check_is_fitted(self, "estimate_")
        return self.log10_p_


class MCMCCrossEntropy(_TailEstimatorMixin, BaseEstimator):
    """Two-phase MCMC cross-entropy tail estimator.

    Parameters
    ----------
    n_samples : int
        Post-burn-in MCMC draws used to fit the proposal.
    m : int
        Importance-sampling draws.
    burn_in : int
    sampler : {'gibbs', 'hit_and_run', 'hmc'} or None
        None picks Gibbs for linear regions and HMC for quadratic ones.
    hmc_travel_time : float
    random_state : int
        Seed of the chain; the importance draws use an independent derived stream.

    Examples
    --------
    >>> from smallp import TailProblem
    >>> est = MCMCCrossEntropy(random_state=1).fit(TailProblem.quadratic([1.0, 1.0], 2 * 23.0258509))
    >>> round(est.log10_p_)
    -10
    """

    def __init__(self, n_samples=10_000, m=10_000, burn_in=1000, sampler=None,
                 hmc_travel_time=math.pi / 2, random_state=0):
        self.n_samples = n_samples
        self.m = m
        self.burn_in = burn_in
        self.sampler = sampler
        self.hmc_travel_time = hmc_travel_time
        self.random_state = random_state

    def fit(self, problem: TailProblem, y=None):
        cfg = ChainConfig(burn_in=self.burn_in, n_samples=self.n_samples, sampler=self.sampler,
                          seed=self.random_state, hmc_travel_time=self.hmc_travel_time)
        return self._store(mcmc_ce(problem, cfg, self.m))


class MultilevelCrossEntropy(_TailEstimatorMixin, BaseEstimator):
    """Adaptive multi-level cross-entropy tail estimator (direct Gaussian sampling)."""

    def __init__(self, rho=0.1, n=10_000, m=10_000, random_state=0):
        self.rho = rho
        self.n = n
        self.m = m
        self.random_state = random_state

    def fit(self, problem: TailProblem, y=None):
        est = multilevel_ce(problem, self.rho, self.n, self.m, _generator(self.random_state))
        return self._store(est)


__all__ = ["GaussianProposal", "MCMCCrossEntropy", "MultilevelCrossEntropy"]
