"""Domain types: Gaussian parameters, constraint regions, tail problems, results."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Union

import numpy as np
from scipy.linalg import LinAlgError, cholesky, solve_triangular

from ._validation import as_matrix, as_points, as_vector, check_count, readonly
from .errors import ConfigError, NotPositiveDefiniteError

LOG_2PI = math.log(2.0 * math.pi)

# Canonical thresholds keep this many mantissa bits so that problems that
# differ only by a common scale factor map to bit-identical internal values.
_CANONICAL_BITS = 40


def _cholesky_lower(cov: np.ndarray) -> np.ndarray | None:
    try:
        chol = cholesky(cov, lower=True, check_finite=False)
    except LinAlgError:
        return None
    if not np.all(np.isfinite(chol)) or np.any(np.diag(chol) <= 0.0):
        return None
    return chol


class MvnParams:
    """Mean and covariance of a multivariate normal with a cached Cholesky factor.

    If ``cov`` is not numerically positive definite, a ridge of
    ``1e-10 * trace(cov) / d`` is added once before giving up.
    """

    __slots__ = ("mean", "cov", "chol", "log_det")

    def __init__(self, mean, cov):
        mean = as_vector(mean, "mean")
        d = mean.shape[0]
        cov = as_matrix(cov, "cov", shape=(d, d))
        scale = max(float(np.abs(cov).max()), np.finfo(float).tiny)
        if np.abs(cov - cov.T).max() > 1e-12 * scale:
            raise ConfigError("cov is not symmetric")
        cov = 0.5 * (cov + cov.T)

        chol = _cholesky_lower(cov)
        if chol is None:
            ridge = 1e-10 * np.trace(cov) / d
            if ridge > 0:
                cov = cov + ridge * np.eye(d)
                chol = _cholesky_lower(cov)
        if chol is None:
            raise NotPositiveDefiniteError("covariance is not positive definite")

        log_det = 2.0 * float(np.sum(np.log(np.diag(chol))))
        if not math.isfinite(log_det):
            raise NotPositiveDefiniteError("covariance log-determinant is not finite")

        self.mean = readonly(mean)
        self.cov = readonly(cov)
        self.chol = readonly(chol)
        self.log_det = log_det

    @classmethod
    def standard(cls, d: int) -> "MvnParams":
        d = check_count(d, "d", minimum=1)
        return cls(np.zeros(d), np.eye(d))

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        z = rng.standard_normal((n, self.dim))
        return self.mean + z @ self.chol.T

    def whiten(self, y) -> np.ndarray:
        """Map points to coordinates where this distribution is N(0, I)."""
        pts, single = as_points(y, self.dim)
        z = solve_triangular(self.chol, (pts - self.mean).T, lower=True, check_finite=False).T
        return z[0] if single else z

    def __repr__(self) -> str:
        return f"MvnParams(dim={self.dim}, log_det={self.log_det:.6g})"


def log_density(theta: MvnParams, y) -> float | np.ndarray:
    """Log density of ``N(theta.mean, theta.cov)`` at one point or at each row of ``y``."""
    pts, single = as_points(y, theta.dim)
    z = solve_triangular(theta.chol, (pts - theta.mean).T, lower=True, check_finite=False)
    maha = np.einsum("ij,ij->j", z, z)
    out = -0.5 * (theta.dim * LOG_2PI + theta.log_det + maha)
    return float(out[0]) if single else out


def _round_mantissa(x: np.ndarray, bits: int = _CANONICAL_BITS) -> np.ndarray:
    m, e = np.frexp(np.asarray(x, dtype=float))
    return np.ldexp(np.round(m * 2.0**bits) / 2.0**bits, e)


class QuadExterior:
    """Region ``{y : sum_i lambdas[i] * y[i]**2 >= q}`` with positive weights."""

    kind = "quad"

    def __init__(self, lambdas, q: float, feasible_point=None):
        lambdas = as_vector(lambdas, "lambdas")
        if np.any(lambdas <= 0):
            raise ConfigError("all lambdas must be positive")
        q = float(q)
        if not (q > 0 and math.isfinite(q)):
            raise ConfigError(f"q must be positive and finite, got {q}")
        self.lambdas = readonly(lambdas)
        self.q = q

        lam_max = float(lambdas.max())
        self.canonical_lambdas = readonly(_round_mantissa(lambdas / lam_max))
        self.canonical_q = float(_round_mantissa(q / lam_max))

        if feasible_point is None:
            k = int(np.argmax(lambdas))
            feasible_point = np.zeros(lambdas.shape[0])
            feasible_point[k] = 1.01 * math.sqrt(q / lambdas[k])
        feasible_point = as_vector(feasible_point, "feasible_point", size=self.dim)
        if not self.contains(feasible_point) or self.margin(feasible_point) <= 0:
            raise ConfigError("feasible_point does not strictly satisfy the constraint")
        self.feasible_point = readonly(feasible_point)

    @property
    def dim(self) -> int:
        return self.lambdas.shape[0]

    @property
    def level(self) -> float:
        return self.q

    def statistic(self, y):
        pts, single = as_points(y, self.dim)
        out = (pts * pts) @ self.lambdas
        return float(out[0]) if single else out

    def margin(self, y):
        pts, single = as_points(y, self.dim)
        out = (pts * pts) @ self.canonical_lambdas - self.canonical_q
        return float(out[0]) if single else out

    def contains(self, y):
        m = self.margin(y)
        return m >= 0 if np.ndim(m) else bool(m >= 0)

    def __repr__(self) -> str:
        return f"QuadExterior(dim={self.dim}, q={self.q:.6g})"


class LinearSystem:
    """Open polyhedral cone-like region ``{y : (C @ y)[i] > 0 for all i}``.

    Without an explicit ``feasible_point`` one is found by maximising the
    minimum margin over the unit box with a linear program.
    """

    kind = "linear"

    def __init__(self, c_matrix, feasible_point=None):
        c = as_matrix(c_matrix, "c_matrix")
        if c.shape[0] == 0:
            raise ConfigError("c_matrix needs at least one row")
        self.c_matrix = readonly(c)
        if feasible_point is None:
            feasible_point = _interior_point(c)
        feasible_point = as_vector(feasible_point, "feasible_point", size=self.dim)
        if not self.contains(feasible_point):
            raise ConfigError("feasible_point does not strictly satisfy the constraint")
        self.feasible_point = readonly(feasible_point)

    @property
    def dim(self) -> int:
        return self.c_matrix.shape[1]

    @property
    def level(self) -> float:
        return 0.0

    def statistic(self, y):
        pts, single = as_points(y, self.dim)
        out = (pts @ self.c_matrix.T).min(axis=1)
        return float(out[0]) if single else out

    margin = statistic

    def contains(self, y):
        m = self.statistic(y)
        return m > 0 if np.ndim(m) else bool(m > 0)

    def __repr__(self) -> str:
        return f"LinearSystem(rows={self.c_matrix.shape[0]}, dim={self.dim})"


def _interior_point(c: np.ndarray) -> np.ndarray:
    from scipy.optimize import linprog

    k, d = c.shape
    # maximise t subject to C y >= t, -1 <= y <= 1
    cost = np.zeros(d + 1)
    cost[-1] = -1.0
    a_ub = np.hstack([-c, np.ones((k, 1))])
    bounds = [(-1.0, 1.0)] * d + [(None, 1.0)]
    res = linprog(cost, A_ub=a_ub, b_ub=np.zeros(k), bounds=bounds, method="highs")
    if not res.success or res.x[-1] <= 0:
        raise ConfigError("linear constraint region is empty")
    return res.x[:d]


Constraint = Union[QuadExterior, LinearSystem]


@dataclass(frozen=True)
class TailProblem:
    """``Pr[Y in region]`` for ``Y ~ theta0``; the event is ``T(Y) >= q``."""

    theta0: MvnParams
    constraint: Constraint

    def __post_init__(self):
        if self.theta0.dim != self.constraint.dim:
            raise ConfigError(
                f"theta0 has dimension {self.theta0.dim} but the constraint has {self.constraint.dim}"
            )

    @classmethod
    def quadratic(cls, lambdas, q: float) -> "TailProblem":
        """``Pr[sum lambdas_i Y_i^2 >= q]`` for standard normal ``Y``."""
        con = QuadExterior(lambdas, q)
        return cls(MvnParams.standard(con.dim), con)

    @property
    def dim(self) -> int:
        return self.theta0.dim

    @property
    def feasible_point(self) -> np.ndarray:
        return self.constraint.feasible_point

    def statistic(self, y):
        return self.constraint.statistic(y)

    def contains(self, y):
        return self.constraint.contains(y)


def statistic(problem: TailProblem, y):
    """Sum of weighted squares for quadratic regions; minimum margin for linear ones."""
    return problem.statistic(y)


class Sampler(str, Enum):
    GIBBS = "gibbs"
    HIT_AND_RUN = "hit_and_run"
    HMC = "hmc"

    @classmethod
    def parse(cls, value) -> "Sampler":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_")
        aliases = {"hitrun": "hit_and_run", "hit_run": "hit_and_run", "exact_hmc": "hmc"}
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise ConfigError(f"unknown sampler {value!r}") from None


def default_sampler(problem: TailProblem) -> Sampler:
    return Sampler.GIBBS if problem.constraint.kind == "linear" else Sampler.HMC


@dataclass(frozen=True)
class ChainConfig:
    burn_in: int = 1000
    n_samples: int = 10_000
    sampler: Sampler | None = None
    seed: int = 0
    hmc_travel_time: float = math.pi / 2

    def __post_init__(self):
        check_count(self.burn_in, "burn_in", minimum=0)
        check_count(self.n_samples, "n_samples", minimum=1)
        if not (0 <= int(self.seed) < 2**64):
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if not (self.hmc_travel_time > 0 and math.isfinite(self.hmc_travel_time)):
            raise ConfigError("hmc_travel_time must be positive")
        if self.sampler is not None:
            object.__setattr__(self, "sampler", Sampler.parse(self.sampler))

    def resolve_sampler(self, problem: TailProblem) -> Sampler:
        return self.sampler if self.sampler is not None else default_sampler(problem)


class Method(str, Enum):
    MCMC_CE = "mcmc_ce"
    MULTILEVEL_CE = "multilevel_ce"
    BRUTE_MC = "brute_mc"
    IMHOF = "imhof"

    @classmethod
    def parse(cls, value) -> "Method":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_")
        aliases = {"mc": "brute_mc", "brute": "brute_mc", "ce": "mcmc_ce", "multilevel": "multilevel_ce"}
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise ConfigError(f"unknown method {value!r}") from None


_LN10 = math.log(10.0)


@dataclass(frozen=True)
class TailEstimate:
    """A tail-probability estimate. ``log10_p`` is authoritative; ``p`` may underflow to 0."""

    log10_p: float
    rel_se: float
    n_proposal_hits: int
    method: Method
    n_draws: int = 0
    status: str = "ok"
    diagnostics: dict[str, Any] = field(default_factory=dict, compare=False, repr=False)
    p: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        lp = float(self.log10_p)
        object.__setattr__(self, "log10_p", lp)
        object.__setattr__(self, "p", 10.0**lp if lp > -324 else 0.0)

    @classmethod
    def from_log(cls, log_p: float, **kwargs) -> "TailEstimate":
        return cls(log10_p=log_p / _LN10, **kwargs)

    @property
    def log_p(self) -> float:
        """Natural log of the estimate."""
        return self.log10_p * _LN10

    @property
    def reliable(self) -> bool:
        return self.status == "ok"
