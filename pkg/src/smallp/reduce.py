"""Reductions from applied test statistics to canonical tail problems.

Two families are covered:

* Gram-matrix quadratic forms ``r' Z W Z' r`` with ``r ~ N(0, I_n)``, reduced to
  a weighted sum of independent squared standard normals by an eigendecomposition.
* The ratio ``y1 / y2`` of two independent group means, whose tail event is a
  pair of linear cones in the plane.
"""

from __future__ import annotations

import math

import numpy as np

from ._validation import as_matrix, as_vector, check_count
from .errors import ConfigError
from .model import LinearSystem, MvnParams, TailProblem

EIG_DROP = 1e-12


def quadform_from_matrices(
    feature_matrix,
    residual,
    weights=None,
    scale_by_n: bool = False,
) -> tuple[np.ndarray, float]:
    """Eigenvalues and observed value for ``Q = c * r' Z W Z' r``.

    ``c`` is ``1/n`` when ``scale_by_n`` is set and 1 otherwise. The returned
    eigenvalues already include ``c``, so ``Pr[Q >= q_obs]`` equals
    ``Pr[sum(lambdas * Y**2) >= q_obs]`` for standard normal ``Y``.

    Parameters
    ----------
    feature_matrix : array_like, shape (n, k)
    residual : array_like, shape (n,)
        Observed ``y - mu``.
    weights : array_like, shape (k,), optional
        Positive per-feature weights (the diagonal of ``W``).
    scale_by_n : bool

    Returns
    -------
    lambdas : ndarray
        Positive eigenvalues sorted in decreasing order; those below
        ``1e-12 * max`` are dropped as numerically zero.
    q_obs : float

    Examples
    --------
    >>> lam, q = quadform_from_matrices(np.eye(2), [1.0, 0.0], scale_by_n=True)
    >>> lam.tolist(), q
    ([0.5, 0.5], 0.5)
    """
    z = as_matrix(feature_matrix, "feature_matrix")
    n, k = z.shape
    r = as_vector(residual, "residual", size=n)
    if weights is None:
        w = np.ones(k)
    else:
        w = as_vector(weights, "weights", size=k)
        if np.any(w <= 0):
            raise ConfigError("weights must be positive")
    c = 1.0 / n if scale_by_n else 1.0

    proj = z.T @ r
    q_obs = c * float(proj @ (w * proj))

    # Z W Z' and W^{1/2} Z' Z W^{1/2} share their nonzero spectrum.
    zw = z * np.sqrt(w)
    gram = zw.T @ zw if k <= n else zw @ zw.T
    eig = np.linalg.eigvalsh(0.5 * (gram + gram.T)) * c
    top = float(eig.max(initial=0.0))
    if not top > 0:
        raise ConfigError("degenerate statistic: no positive eigenvalues")
    keep = eig[eig > EIG_DROP * top]
    return np.sort(keep)[::-1].copy(), q_obs


def quadform_problem(lambdas, q_obs: float) -> TailProblem:
    """Tail problem ``Pr[sum(lambdas * Y**2) >= q_obs]``."""
    return TailProblem.quadratic(lambdas, q_obs)


def ratio_to_linear(
    q_ratio: float,
    n1: int,
    n2: int,
    mu: float = 0.0,
    sigma: float = 1.0,
    two_sided_orthants: bool = True,
) -> list[TailProblem]:
    """Linear-cone problems whose probabilities sum to ``Pr[y1 / y2 >= q]``.

    ``y1 ~ N(mu, sigma**2 / n1)`` and ``y2 ~ N(mu, sigma**2 / n2)`` independently.
    The first cone is ``{y2 > 0, y1 - q*y2 > 0}``. With ``two_sided_orthants`` the
    mirrored cone ``{y2 < 0, y1 - q*y2 < 0}`` is appended; otherwise only
    positive denominators are counted.

    Examples
    --------
    >>> [p.constraint.c_matrix.tolist() for p in ratio_to_linear(1.0, 1, 1, two_sided_orthants=False)]
    [[[0.0, 1.0], [1.0, -1.0]]]
    """
    q = float(q_ratio)
    if not math.isfinite(q):
        raise ConfigError("q_ratio must be finite")
    n1 = check_count(n1, "n1", minimum=1)
    n2 = check_count(n2, "n2", minimum=1)
    mu = float(mu)
    sigma = float(sigma)
    if not (sigma > 0 and math.isfinite(sigma)) or not math.isfinite(mu):
        raise ConfigError("sigma must be positive and mu finite")
    theta0 = MvnParams([mu, mu], np.diag([sigma**2 / n1, sigma**2 / n2]))
    c1 = np.array([[0.0, 1.0], [1.0, -q]])
    problems = [TailProblem(theta0, LinearSystem(c1, feasible_point=_cone_point(q, mu, sigma / math.sqrt(n1))))]
    if two_sided_orthants:
        start = -_cone_point(q, -mu, sigma / math.sqrt(n1))
        problems.append(TailProblem(theta0, LinearSystem(-c1, feasible_point=start)))
    return problems


def _cone_point(q: float, mu: float, sd1: float) -> np.ndarray:
    """A point of ``{y2 > 0, y1 > q*y2}`` near where the base density is large."""
    y1 = max(mu, 0.0) + sd1
    y2 = y1 / (2.0 * q) if q > 0 else 1.0
    return np.array([y1, y2])


def pooled_moments(group1, group2) -> tuple[float, float]:
    """Grand mean and pooled standard deviation of two samples.

    A convenience for choosing ``mu`` and ``sigma`` under the null of equal means.
    """
    a = as_vector(group1, "group1")
    b = as_vector(group2, "group2")
    if a.size + b.size < 3 or min(a.size, b.size) < 1:
        raise ConfigError("need at least three observations across both groups")
    mu = float(np.concatenate([a, b]).mean())
    ss = float(((a - a.mean()) ** 2).sum() + ((b - b.mean()) ** 2).sum())
    sigma = math.sqrt(ss / (a.size + b.size - 2))
    if not sigma > 0:
        raise ConfigError("pooled standard deviation is zero")
    return mu, sigma
