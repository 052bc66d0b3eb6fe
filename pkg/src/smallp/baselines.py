"""Reference estimators: brute-force Monte Carlo and Imhof's numerical inversion."""

from __future__ import annotations

import math
import warnings

import numpy as np
from scipy import integrate

from ._validation import as_vector, check_count
from .errors import ConfigError, ConvergenceError
from .model import Method, TailEstimate


def brute_force_two_sided_ratio(
    q_ratio: float,
    n1: int,
    n2: int,
    mu: float,
    sigma: float,
    m: int,
    rng: np.random.Generator,
) -> TailEstimate:
    """Two-sided Monte Carlo p-value ``2 * min(Pr[R >= q], Pr[R <= q])`` for ``R = y1 / y2``.

    The estimate is capped at 1. ``rel_se`` treats the smaller tail as binomial.
    """
    m = check_count(m, "m", minimum=1)
    n1 = check_count(n1, "n1", minimum=1)
    n2 = check_count(n2, "n2", minimum=1)
    if not sigma > 0:
        raise ConfigError("sigma must be positive")
    y1 = rng.normal(mu, sigma / math.sqrt(n1), m)
    y2 = rng.normal(mu, sigma / math.sqrt(n2), m)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = y1 / y2
    upper = np.count_nonzero(ratio >= q_ratio)
    lower = np.count_nonzero(ratio <= q_ratio)
    hits = min(upper, lower)
    tail = hits / m
    p = min(1.0, 2.0 * tail)
    rel_se = math.sqrt((1.0 - tail) / (m * tail)) if hits else math.inf
    return TailEstimate(
        log10_p=math.log10(p) if p > 0 else -math.inf, rel_se=rel_se, n_proposal_hits=hits,
        method=Method.BRUTE_MC, n_draws=m, status="ok" if hits else "no_hits",
        diagnostics={"upper": int(upper), "lower": int(lower)},
    )


def brute_force_quadform(lambdas, q: float, m: int, rng: np.random.Generator) -> TailEstimate:
    """Plain Monte Carlo ``Pr[sum(lambdas * Y**2) >= q]``, drawn in blocks to bound memory."""
    lam = as_vector(lambdas, "lambdas")
    m = check_count(m, "m", minimum=1)
    hits = 0
    block = 1 << 16
    done = 0
    while done < m:
        size = min(block, m - done)
        y = rng.standard_normal((size, lam.size))
        hits += int(np.count_nonzero((y * y) @ lam >= q))
        done += size
    p = hits / m
    return TailEstimate(
        log10_p=math.log10(p) if hits else -math.inf,
        rel_se=math.sqrt((1.0 - p) / (m * p)) if hits else math.inf,
        n_proposal_hits=hits, method=Method.BRUTE_MC, n_draws=m,
        status="ok" if hits else "no_hits",
    )


def _imhof_parts(lam: np.ndarray, q: float):
    half_q = 0.5 * q

    def phase(u):
        return 0.5 * np.sum(np.arctan(lam * u))

    def log_rho(u):
        return 0.25 * np.sum(np.log1p((lam * u) ** 2))

    def head(u):
        if u == 0.0:
            # limit of sin(theta(u)) / u as u -> 0
            return 0.5 * float(lam.sum()) - half_q
        return math.sin(phase(u) - half_q * u) / (u * math.exp(log_rho(u)))

    def amp_sin(u):
        return math.sin(phase(u)) / (u * math.exp(log_rho(u)))

    def amp_cos(u):
        return -math.cos(phase(u)) / (u * math.exp(log_rho(u)))

    return head, amp_sin, amp_cos, half_q


IMHOF_MAX_ABSERR = 1e-10
# Split points between the adaptive head and the Fourier tail, tried in turn.
# A later split helps when the amplitude still changes sign within the first
# low-frequency cycles, which can stall the tail extrapolation.
IMHOF_SPLITS = (1.0, 8.0, 64.0, 512.0)


def _quad(func, a, b, **kwargs) -> float:
    """QUADPACK integral; roundoff warnings are tolerated when the error estimate is tiny."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        value, abserr = integrate.quad(func, a, b, **kwargs)[:2]
    if not (math.isfinite(value) and abserr <= IMHOF_MAX_ABSERR):
        raise ConvergenceError(f"Imhof quadrature did not converge (error estimate {abserr:.3g})")
    return value


def imhof(lambdas, q: float) -> float:
    """``Pr[sum(lambdas * Y**2) >= q]`` by Imhof's inversion formula.

    ``p = 1/2 + (1/pi) * integral_0^inf sin(theta(u)) / (u * rho(u)) du`` with
    ``theta(u) = sum(arctan(lambda_i u)) / 2 - q u / 2`` and
    ``rho(u) = prod((1 + lambda_i**2 u**2) ** (1/4))``.

    The integral is split at ``u = 1`` (moved further out if the tail does not
    converge). The head uses adaptive Gauss-Kronrod quadrature; on the tail the
    oscillating factor ``sin(q u / 2)`` is handled by QUADPACK's
    Fourier-integral routine. The result is computed in
    linear space on purpose: near ``1e-16`` relative to the leading ``1/2`` it
    is lost to cancellation, which is the known limitation of this method.

    Raises
    ------
    ConvergenceError
        If a QUADPACK error estimate exceeds ``1e-10``.
    """
    lam = as_vector(lambdas, "lambdas")
    if np.any(lam <= 0):
        raise ConfigError("all lambdas must be positive")
    q = float(q)
    if not (q > 0 and math.isfinite(q)):
        raise ConfigError("q must be positive and finite")
    head, amp_sin, amp_cos, omega = _imhof_parts(lam, q)
    error = None
    for split in IMHOF_SPLITS:
        # sin(phase - omega u) = sin(phase) cos(omega u) - cos(phase) sin(omega u)
        try:
            i_head = _quad(head, 0.0, split, epsabs=1e-15, epsrel=1e-13, limit=2000)
            i_cos = _quad(amp_sin, split, np.inf, weight="cos", wvar=omega, epsabs=1e-15, limlst=200)
            i_sin = _quad(amp_cos, split, np.inf, weight="sin", wvar=omega, epsabs=1e-15, limlst=200)
        except ConvergenceError as exc:
            error = exc
            continue
        return 0.5 + (i_head + i_cos + i_sin) / math.pi
    raise error


def imhof_estimate(lambdas, q: float) -> TailEstimate:
    """:func:`imhof` wrapped as a :class:`TailEstimate`.

    Non-positive results (pure cancellation error) are reported as ``-inf``
    with status ``"nonpositive"``.
    """
    p = imhof(lambdas, q)
    if p > 0:
        return TailEstimate(log10_p=math.log10(p), rel_se=0.0, n_proposal_hits=0, method=Method.IMHOF,
                            diagnostics={"p_linear": p})
    return TailEstimate(log10_p=-math.inf, rel_se=math.inf, n_proposal_hits=0, method=Method.IMHOF,
                        status="nonpositive", diagnostics={"p_linear": p})
