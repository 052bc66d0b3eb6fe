"""Cross-entropy importance sampling: proposal fitting, IS in log space, and drivers.

The two-phase estimator draws from the optimal proposal ``g*`` (the base
distribution truncated to the event) with MCMC, fits a Gaussian to those draws
by maximum likelihood, then runs plain importance sampling with the fit.
All averaging happens in log space so estimates far below ``1e-308`` survive.
"""

from __future__ import annotations

import math
from dataclasses import replace

import numpy as np

from ._validation import check_count
from .errors import ConfigError, MultilevelDegeneracyError, NumericalError
from .model import ChainConfig, Method, MvnParams, TailEstimate, TailProblem, log_density
from .samplers import run_chain
from .specialfn import log_sum_exp

RIDGE = 1e-10
PILOT_SKIP_P = 1e-3
PILOT_MIN_HITS = 30
MULTILEVEL_MAX_ITER = 100
MULTILEVEL_STALL = 5


def fit_mle(samples, weights=None) -> MvnParams:
    """Maximum-likelihood Gaussian for (optionally weighted) samples.

    The covariance uses the ``1/N`` normalisation. A ridge of ``1e-10`` times
    each coordinate's own variance is added to the diagonal, which keeps the
    fit positive definite without swamping coordinates whose natural scale is
    tiny. Coordinates with zero spread get ``1e-10 * trace / d`` instead, or
    ``1e-10`` when every coordinate is constant.

    Parameters
    ----------
    samples : array_like, shape (N, d)
    weights : array_like, shape (N,), optional
        Non-negative weights; normalised internally.

    Raises
    ------
    ConfigError
        If fewer than two samples are given, or samples or weights are not finite.
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim != 2:
        raise ConfigError(f"samples must be a 2-D matrix, got shape {x.shape}")
    n, d = x.shape
    if n < 2:
        raise ConfigError(f"fit_mle needs at least 2 samples, got {n}")
    if not np.all(np.isfinite(x)):
        raise ConfigError("samples contain non-finite values")
    if weights is None:
        w = np.full(n, 1.0 / n)
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != (n,) or not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ConfigError("weights must be a finite non-negative vector of length N")
        total = w.sum()
        if not total > 0:
            raise ConfigError("weights sum to zero")
        w = w / total

    mean = w @ x
    centred = x - mean
    cov = (centred * w[:, None]).T @ centred
    cov = 0.5 * (cov + cov.T)

    diag = np.diag(cov).copy()
    trace = float(diag.sum())
    fallback = RIDGE * (trace / d if trace > 0 else 1.0)
    ridge = np.where(diag > 0, RIDGE * diag, fallback)
    cov[np.diag_indices(d)] += ridge
    return MvnParams(mean, cov)


def _log_weights(problem: TailProblem, proposal: MvnParams, y: np.ndarray) -> np.ndarray:
    return log_density(problem.theta0, y) - log_density(proposal, y)


def is_estimate(
    problem: TailProblem,
    proposal: MvnParams,
    m: int,
    rng: np.random.Generator,
    *,
    method: Method = Method.MCMC_CE,
) -> TailEstimate:
    """Importance-sampling estimate of ``Pr[Y in region]`` using ``proposal``.

    ``log p = logsumexp(w_hits) - log m`` where ``w = log f0 - log f_proposal``.
    ``rel_se`` is ``sqrt(sum(w_norm**2) - 1/m)`` with weights normalised to sum
    to one, computed without leaving log space.
    """
    m = check_count(m, "m", minimum=1)
    if proposal.dim != problem.dim:
        raise ConfigError(f"proposal has dimension {proposal.dim}, problem has {problem.dim}")
    y = proposal.sample(m, rng)
    hits = problem.contains(y)
    n_hits = int(np.count_nonzero(hits))
    diag = {"n_hits": n_hits, "m": m}
    if n_hits == 0:
        diag["max_log_weight"] = -math.inf
        return TailEstimate(
            log10_p=-math.inf, rel_se=math.inf, n_proposal_hits=0, method=method,
            n_draws=m, status="no_hits", diagnostics=diag,
        )
    lw = _log_weights(problem, proposal, y[hits])
    if not np.all(np.isfinite(lw)):
        raise NumericalError("non-finite importance weight")
    lse = log_sum_exp(lw)
    log_p = lse - math.log(m)
    # normalised weights w_l / sum(w) stay in [0, 1]
    sum_sq = math.exp(log_sum_exp(2.0 * (lw - lse)))
    rel_se = math.sqrt(max(sum_sq - 1.0 / m, 0.0))
    diag.update(max_log_weight=float(lw.max()), ess=1.0 / sum_sq)
    return TailEstimate.from_log(
        log_p, rel_se=rel_se, n_proposal_hits=n_hits, method=method, n_draws=m, diagnostics=diag
    )


def _stream_pair(chain_cfg: ChainConfig, rng: np.random.Generator | None):
    """Independent generators for the chain and for the proposal draws."""
    if rng is not None:
        a, b = rng.spawn(2)
        return a, b
    a, b = np.random.SeedSequence(chain_cfg.seed).spawn(2)
    return np.random.default_rng(a), np.random.default_rng(b)


def mcmc_ce(
    problem: TailProblem,
    chain_cfg: ChainConfig | None = None,
    m: int = 10_000,
    rng: np.random.Generator | None = None,
) -> TailEstimate:
    """Two-phase MCMC cross-entropy estimate of ``Pr[Y in region]``.

    Step A samples ``chain_cfg.n_samples`` states from the base distribution
    truncated to the region and fits a Gaussian proposal by maximum likelihood.
    Step B draws ``m`` points from that proposal and averages the likelihood
    ratios of the hits. Without ``rng`` both phases are seeded from
    ``chain_cfg.seed`` through independent child streams.

    Returns
    -------
    TailEstimate
        ``status`` is ``"no_hits"`` (and the estimate is ``-inf`` on the log
        scale) if no proposal draw lands in the region.
    """
    chain_cfg = chain_cfg or ChainConfig()
    chain_rng, is_rng = _stream_pair(chain_cfg, rng)
    samples, info = run_chain(problem, chain_cfg, chain_rng, return_info=True)
    theta_hat = fit_mle(samples)
    est = is_estimate(problem, theta_hat, m, is_rng, method=Method.MCMC_CE)
    diag = dict(est.diagnostics)
    diag.update(theta_hat=theta_hat, chain=info, n_chain=chain_cfg.n_samples)
    return replace(est, n_draws=chain_cfg.burn_in + chain_cfg.n_samples + m, diagnostics=diag)


def multilevel_ce(
    problem: TailProblem,
    rho: float = 0.1,
    n: int = 10_000,
    m: int = 10_000,
    rng: np.random.Generator | None = None,
    *,
    seed: int = 0,
) -> TailEstimate:
    """Adaptive multi-level cross-entropy estimate.

    Each level draws ``n`` points from the current Gaussian, sets the
    intermediate threshold to the sample ``(1 - rho)`` quantile of the
    statistic (capped at the target level) and refits the Gaussian by weighted
    maximum likelihood on the points above it. Once the threshold reaches the
    target, ``m`` importance samples from the latest fit give the estimate.

    Raises
    ------
    MultilevelDegeneracyError
        If the threshold fails to increase for 5 consecutive levels or 100
        levels pass without reaching the target.
    """
    if not (0.0 < rho < 1.0):
        raise ConfigError(f"rho must lie in (0, 1), got {rho}")
    n = check_count(n, "n", minimum=2)
    m = check_count(m, "m", minimum=1)
    if rng is None:
        rng = np.random.default_rng(seed)
    level = problem.constraint.level
    theta = problem.theta0
    best = -math.inf
    stall = 0
    levels = []
    for _ in range(MULTILEVEL_MAX_ITER):
        y = theta.sample(n, rng)
        t = problem.statistic(y)
        q_k = float(np.quantile(t, 1.0 - rho))
        reached = q_k >= level
        if reached:
            q_k = level
        hits = t >= q_k
        if q_k > best and np.count_nonzero(hits) >= 2:
            best = q_k
            stall = 0
        else:
            stall += 1
            if stall >= MULTILEVEL_STALL:
                raise MultilevelDegeneracyError(
                    f"multilevel degeneracy: threshold stuck at {best:.6g} (target {level:.6g}) "
                    f"for {MULTILEVEL_STALL} levels"
                )
            continue
        lw = _log_weights(problem, theta, y[hits])
        w = np.exp(lw - lw.max())
        try:
            theta = fit_mle(y[hits], w)
        except (ConfigError, NumericalError) as exc:
            raise MultilevelDegeneracyError(f"multilevel degeneracy: refit failed ({exc})") from exc
        levels.append(q_k)
        if reached:
            break
    else:
        raise MultilevelDegeneracyError(
            f"multilevel degeneracy: target {level:.6g} not reached in {MULTILEVEL_MAX_ITER} levels"
        )
    est = is_estimate(problem, theta, m, rng, method=Method.MULTILEVEL_CE)
    diag = dict(est.diagnostics)
    diag.update(theta_hat=theta, levels=levels)
    return replace(est, n_draws=n * len(levels) + m, diagnostics=diag)


def pilot_mc(problem: TailProblem, n: int, rng: np.random.Generator) -> TailEstimate:
    """Plain Monte Carlo proportion of hits among ``n`` base draws, with binomial SE."""
    n = check_count(n, "n", minimum=1)
    y = problem.theta0.sample(n, rng)
    hits = int(np.count_nonzero(problem.contains(y)))
    p = hits / n
    rel_se = math.sqrt((1.0 - p) / (n * p)) if hits else math.inf
    return TailEstimate(
        log10_p=math.log10(p) if hits else -math.inf, rel_se=rel_se, n_proposal_hits=hits,
        method=Method.BRUTE_MC, n_draws=n, status="ok" if hits else "no_hits",
        diagnostics={"n_hits": hits},
    )


def combine_disjoint(estimates, method: Method | None = None) -> TailEstimate:
    """Sum of estimates for disjoint events, with their standard errors combined.

    Used for two-sided events that split into separately estimated pieces.
    """
    estimates = list(estimates)
    if not estimates:
        raise ConfigError("nothing to combine")
    logs = np.array([e.log_p for e in estimates])
    if np.all(logs == -math.inf):
        log_p = -math.inf
        rel_se = math.inf
    else:
        log_p = log_sum_exp(logs)
        share = np.exp(logs - log_p)
        rel_se = float(math.sqrt(sum((s * e.rel_se) ** 2 for s, e in zip(share, estimates) if s > 0)))
    statuses = {e.status for e in estimates}
    status = "ok" if statuses == {"ok"} else ",".join(sorted(statuses - {"ok"}))
    return TailEstimate.from_log(
        log_p, rel_se=rel_se, n_proposal_hits=sum(e.n_proposal_hits for e in estimates),
        method=method or estimates[0].method, n_draws=sum(e.n_draws for e in estimates),
        status=status, diagnostics={"parts": estimates},
    )


def estimate_tail(
    problem: TailProblem,
    *,
    method: Method | str = Method.MCMC_CE,
    chain_cfg: ChainConfig | None = None,
    m: int = 10_000,
    rho: float = 0.1,
    pilot_n: int | None = None,
    rng: np.random.Generator | None = None,
) -> TailEstimate:
    """Screen with plain Monte Carlo, then run a CE estimator if the event is rare.

    If the pilot sees ``p > 1e-3`` with at least 30 hits, its estimate is
    returned directly. ``pilot_n`` defaults to ``m``; pass 0 to skip the screen.
    """
    method = Method.parse(method)
    chain_cfg = chain_cfg or ChainConfig()
    if rng is None:
        rng = np.random.default_rng(chain_cfg.seed)
    pilot_rng, main_rng = rng.spawn(2)
    pilot_n = m if pilot_n is None else pilot_n
    if pilot_n:
        pilot = pilot_mc(problem, pilot_n, pilot_rng)
        if pilot.p > PILOT_SKIP_P and pilot.n_proposal_hits >= PILOT_MIN_HITS:
            return replace(pilot, diagnostics={**pilot.diagnostics, "pilot": True})
    if method is Method.MCMC_CE:
        return mcmc_ce(problem, chain_cfg, m, main_rng)
    if method is Method.MULTILEVEL_CE:
        return multilevel_ce(problem, rho, chain_cfg.n_samples, m, main_rng)
    if method is Method.BRUTE_MC:
        return pilot_mc(problem, m, main_rng)
    raise ConfigError(f"method {method.value} is not a simulation estimator")


__all__ = [
    "fit_mle",
    "is_estimate",
    "mcmc_ce",
    "multilevel_ce",
    "pilot_mc",
    "combine_disjoint",
    "estimate_tail",
]
