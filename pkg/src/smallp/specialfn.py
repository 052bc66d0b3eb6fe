"""Log-space tail functions and an extreme-tail-safe truncated normal sampler.

Everything returns natural-log probabilities. The scalar kernels are
compiled with numba so the MCMC samplers can call them in tight loops.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from .errors import ConfigError, ConvergenceError

LN2 = math.log(2.0)
HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
SQRT2 = math.sqrt(2.0)

# beyond this standard-normal truncation point use exponential tilting
TAIL_SWITCH = 8.0


# ---------------------------------------------------------------------------
# normal tail
# ---------------------------------------------------------------------------


@njit(cache=True)
def _mills_ratio_cf(z):
    # Lentz evaluation of 1/(z + 1/(z + 2/(z + 3/(z + ...)))), valid for z >= 8
    tiny = 1e-300
    f = z
    c = z
    d = 0.0
    for n in range(1, 500):
        an = float(n)
        d = z + an * d
        if d == 0.0:
            d = tiny
        c = z + an / c
        if c == 0.0:
            c = tiny
        d = 1.0 / d
        delta = c * d
        f *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return 1.0 / f


@njit(cache=True)
def _log_normal_sf(z):
    if z > TAIL_SWITCH:
        return -0.5 * z * z - HALF_LOG_2PI + math.log(_mills_ratio_cf(z))
    if z >= 0.0:
        return math.log(0.5 * math.erfc(z / SQRT2))
    return math.log1p(-0.5 * math.erfc(-z / SQRT2))


def log_normal_sf(z: float) -> float:
    """``ln Pr(Z >= z)`` for a standard normal ``Z``."""
    z = float(z)
    if math.isnan(z):
        raise ConfigError("z is NaN")
    if z == math.inf:
        return -math.inf
    if z == -math.inf:
        return 0.0
    return float(_log_normal_sf(z))


@njit(cache=True)
def _norm_ppf(p):
    # Acklam's rational approximation followed by one Halley refinement
    a0, a1, a2 = -3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02
    a3, a4, a5 = 1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00
    b0, b1, b2 = -5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02
    b3, b4 = 6.680131188771972e01, -1.328068155288572e01
    c0, c1, c2 = -7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00
    c3, c4, c5 = -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00
    d0, d1, d2, d3 = 7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00, 3.754408661907416e00
    plow = 0.02425
    if p < plow:
        q = math.sqrt(-2.0 * math.log(p))
        x = (((((c0 * q + c1) * q + c2) * q + c3) * q + c4) * q + c5) / ((((d0 * q + d1) * q + d2) * q + d3) * q + 1.0)
    elif p <= 1.0 - plow:
        q = p - 0.5
        r = q * q
        x = (((((a0 * r + a1) * r + a2) * r + a3) * r + a4) * r + a5) * q / (
            ((((b0 * r + b1) * r + b2) * r + b3) * r + b4) * r + 1.0
        )
    else:
        q = math.sqrt(-2.0 * math.log1p(-p))
        x = -(((((c0 * q + c1) * q + c2) * q + c3) * q + c4) * q + c5) / ((((d0 * q + d1) * q + d2) * q + d3) * q + 1.0)
    if x <= 0.0:
        e = 0.5 * math.erfc(-x / SQRT2) - p
    else:
        e = (1.0 - p) - 0.5 * math.erfc(x / SQRT2)
    u = e * math.sqrt(2.0 * math.pi) * math.exp(0.5 * x * x)
    return x - u / (1.0 + 0.5 * x * u)


@njit(cache=True)
def _normal_isf_log(log_u):
    """z with ln Pr(Z >= z) = log_u, for log_u <= ln 0.5."""
    return -_norm_ppf(math.exp(log_u))


# ---------------------------------------------------------------------------
# truncated normal sampling
# ---------------------------------------------------------------------------


@njit(cache=True)
def _tn_upper(a, b, rng):
    # standard normal on [a, b] with 0 <= a < b <= inf
    w = b - a
    if w * (a + 0.5 * w) <= 1.0:
        # narrow interval: uniform proposal, acceptance >= exp(-1)
        while True:
            x = a + w * rng.random()
            if math.log(rng.random()) <= -0.5 * (x - a) * (x + a):
                return x
    if a < TAIL_SWITCH:
        la = _log_normal_sf(a)
        if b == math.inf:
            r = 0.0
        else:
            r = math.exp(_log_normal_sf(b) - la)
        s = r + (1.0 - r) * rng.random()
        if s <= 0.0:
            s = 5e-324
        x = _normal_isf_log(la + math.log(s))
        if x < a:
            x = a
        elif x > b:
            x = b
        return x
    alpha = 0.5 * (a + math.sqrt(a * a + 4.0))
    while True:
        x = a + rng.exponential() / alpha
        if x > b:
            continue
        if math.log(rng.random()) <= -0.5 * (x - alpha) * (x - alpha):
            return x


@njit(cache=True)
def _tn_interval(lo, hi, rng):
    if lo >= 0.0:
        return _tn_upper(lo, hi, rng)
    if hi <= 0.0:
        return -_tn_upper(-hi, -lo, rng)
    if hi - lo >= 2.0:
        while True:
            x = rng.standard_normal()
            if lo <= x <= hi:
                return x
    while True:
        x = lo + (hi - lo) * rng.random()
        if math.log(rng.random()) <= -0.5 * x * x:
            return x


@njit(cache=True)
def _tn_draw(lo, hi, outside, rng):
    """Standard normal restricted to [lo, hi], or to its complement when ``outside``."""
    if not outside:
        return _tn_interval(lo, hi, rng)
    log_left = _log_normal_sf(-lo)
    log_right = _log_normal_sf(hi)
    p_left = 1.0 / (1.0 + math.exp(log_right - log_left))
    if rng.random() < p_left:
        return -_tn_interval(-lo, math.inf, rng)
    return _tn_interval(hi, math.inf, rng)


def sample_trunc_normal(lo: float, hi: float, rng: np.random.Generator, *, outside: bool = False) -> float:
    """One exact draw from a standard normal restricted to ``[lo, hi]``.

    With ``outside=True`` the support is the complement ``(-inf, lo] U [hi, inf)``;
    ``lo=-a, hi=a`` gives the symmetric two-tail set ``{|x| >= a}``.
    """
    lo, hi = float(lo), float(hi)
    if math.isnan(lo) or math.isnan(hi) or not lo < hi:
        raise ConfigError(f"empty truncation set: lo={lo}, hi={hi}")
    if outside and (math.isinf(lo) or math.isinf(hi)):
        raise ConfigError("outside=True needs finite bounds")
    return float(_tn_draw(lo, hi, bool(outside), rng))


# ---------------------------------------------------------------------------
# chi-squared tail
# ---------------------------------------------------------------------------


def _log_gamma_q(a: float, x: float) -> float:
    """ln of the regularized upper incomplete gamma function Q(a, x)."""
    if x <= 0.0:
        return 0.0
    log_prefactor = -x + a * math.log(x) - math.lgamma(a)
    if x < a + 1.0:
        # series for the lower function P(a, x)
        term = 1.0 / a
        total = term
        ap = a
        for _ in range(10_000):
            ap += 1.0
            term *= x / ap
            total += term
            if abs(term) < abs(total) * 1e-17:
                break
        p = math.exp(log_prefactor + math.log(total))
        return math.log1p(-p) if p < 1.0 else -math.inf
    # continued fraction for Q(a, x), modified Lentz
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 10_000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return log_prefactor + math.log(h)


def log_chisq_sf(df: int, q: float) -> float:
    """``ln Pr(chi2_df >= q)``."""
    if df <= 0:
        raise ConfigError("df must be positive")
    q = float(q)
    if q < 0 or math.isnan(q):
        raise ConfigError("q must be non-negative")
    if q == math.inf:
        return -math.inf
    return _log_gamma_q(0.5 * df, 0.5 * q)


def _log_chisq_pdf(df: int, q: float) -> float:
    a = 0.5 * df
    return (a - 1.0) * math.log(q) - 0.5 * q - a * LN2 - math.lgamma(a)


def chisq_sf_inv(df: int, log_p: float, *, rtol: float = 1e-13, max_iter: int = 200) -> float:
    """Threshold ``q`` with ``log_chisq_sf(df, q) == log_p``."""
    log_p = float(log_p)
    if not log_p < 0:
        raise ConfigError("log_p must be negative")
    if df == 2:
        return -2.0 * log_p

    def resid(q):
        return log_chisq_sf(df, q) - log_p

    lo, hi = 0.0, max(float(df), -2.0 * log_p + df)
    while resid(hi) > 0:
        lo, hi = hi, 2.0 * hi
    q = 0.5 * (lo + hi)
    tol = rtol * max(1.0, abs(log_p))
    for _ in range(max_iter):
        r = resid(q)
        if abs(r) <= tol:
            return q
        if r > 0:
            lo = q
        else:
            hi = q
        # d/dq ln sf = -pdf/sf
        slope = -math.exp(_log_chisq_pdf(df, q) - log_chisq_sf(df, q))
        step = q - r / slope if slope < 0 else math.nan
        q = step if lo < step < hi else 0.5 * (lo + hi)
    raise ConvergenceError(f"chisq_sf_inv(df={df}, log_p={log_p}) did not converge")


# ---------------------------------------------------------------------------
# standard Cauchy tail
# ---------------------------------------------------------------------------


def log_cauchy_sf(t: float) -> float:
    """``ln Pr(X >= t)`` for a standard Cauchy ``X``."""
    t = float(t)
    if math.isnan(t):
        raise ConfigError("t is NaN")
    if t > 0:
        # 1/2 - atan(t)/pi == atan(1/t)/pi without cancellation
        return math.log(math.atan2(1.0, t) / math.pi)
    return math.log1p(-math.atan2(1.0, -t) / math.pi) if t < 0 else -LN2


def cauchy_sf_inv(log_p: float, *, max_iter: int = 50) -> float:
    """``t`` with ``log_cauchy_sf(t) == log_p``, for ``log_p < ln 0.5``."""
    log_p = float(log_p)
    if not log_p < -LN2:
        raise ConfigError("log_p must be below ln(0.5)")
    if log_p < -700.0:
        return math.exp(-log_p - math.log(math.pi))
    t = 1.0 / math.tan(math.pi * math.exp(log_p))
    for _ in range(max_iter):
        r = log_cauchy_sf(t) - log_p
        if abs(r) <= 1e-14 * max(1.0, abs(log_p)):
            break
        # d/dt ln sf = -1 / (pi (1 + t^2) sf) = -1 / ((1 + t^2) atan(1/t))
        slope = -1.0 / ((1.0 + t * t) * math.atan2(1.0, t))
        t -= r / slope
    return t


# ---------------------------------------------------------------------------
# log-sum-exp
# ---------------------------------------------------------------------------


def log_sum_exp(values) -> float:
    """``ln sum exp(values)`` with a max shift; ``-inf`` iff every input is ``-inf``."""
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise ConfigError("log_sum_exp of an empty sequence")
    m = float(v.max())
    if m == -math.inf:
        return -math.inf
    if m == math.inf:
        return math.inf
    return m + math.log(float(np.sum(np.exp(v - m))))


def to_linear(log_p: float) -> float:
    """Linear-space probability for ``log_p`` above ln(1e-300); smaller values raise."""
    if log_p < math.log(1e-300):
        raise ConfigError("probability below 1e-300 is not representable safely")
    return math.exp(log_p)
