"""Small tail probabilities of Gaussian quadratic forms and ratios by MCMC cross-entropy."""

from .errors import (
    ConfigError,
    ConvergenceError,
    MultilevelDegeneracyError,
    NotPositiveDefiniteError,
    NumericalError,
    SamplerError,
    SmallPError,
)
from .model import (
    ChainConfig,
    LinearSystem,
    Method,
    MvnParams,
    QuadExterior,
    Sampler,
    TailEstimate,
    TailProblem,
    log_density,
    statistic,
)
from .samplers import run_chain
from .ce import combine_disjoint, estimate_tail, fit_mle, is_estimate, mcmc_ce, multilevel_ce, pilot_mc
from .baselines import brute_force_quadform, brute_force_two_sided_ratio, imhof, imhof_estimate
from .reduce import pooled_moments, quadform_from_matrices, quadform_problem, ratio_to_linear
from .estimators import GaussianProposal, MCMCCrossEntropy, MultilevelCrossEntropy

__version__ = "0.1.0"
