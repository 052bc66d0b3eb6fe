"""Replicated accuracy experiments, data loaders and report writers.

A run estimates one or more target probabilities many times with independent,
seed-derived streams and summarises each target by:

``mean_log10_p``
    log10 of the average of the replicate estimates (averaged in linear
    space through log-sum-exp).
``ARE``
    ``|mean - p| / p``.
``SMSE_literal``
    ``sum((p_i - p)**2) / (R * p)``. It carries the units of ``p`` and is
    reported for completeness only.
``rel_RMSE``
    ``sqrt(mean(((p_i - p) / p)**2))``, the dimensionless spread used for
    accuracy thresholds.
``sd``
    Sample standard deviation (``ddof=1``) of ``p_i / p``; empty for one replicate.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Sequence

import numpy as np

from ._validation import check_count
from .baselines import brute_force_quadform, imhof_estimate
from .ce import combine_disjoint, mcmc_ce, multilevel_ce, pilot_mc
from .errors import ConfigError
from .model import ChainConfig, Method, Sampler, TailEstimate, TailProblem
from .reduce import ratio_to_linear
from .specialfn import cauchy_sf_inv, chisq_sf_inv, log_sum_exp

_LN10 = math.log(10.0)
FAMILIES = ("chisq", "cauchy", "quadform", "ratio")


def parse_method(value) -> Method:
    return Method.parse(value)


@dataclass(frozen=True)
class ExperimentConfig:
    """What to estimate, how, and how often.

    ``family`` selects the problem source. ``chisq`` and ``cauchy`` derive
    each problem (and its exact answer) from ``targets``, given as log10
    probabilities. ``quadform`` uses ``lambdas`` and ``q``; ``ratio`` uses
    ``q`` with the group parameters. For those two the truth is optional
    (``truth_log10_p``); without it accuracy columns stay empty.
    """

    family: str
    method: Method = Method.MCMC_CE
    targets: tuple[float, ...] = ()
    df: int | None = None
    lambdas: tuple[float, ...] = ()
    q: float | None = None
    truth_log10_p: float | None = None
    n1: int = 1
    n2: int = 1
    mu: float = 0.0
    sigma: float = 1.0
    two_sided_orthants: bool = True
    replicates: int = 100
    n: int = 10_000
    m: int = 10_000
    burn_in: int = 1000
    seed: int = 0
    sampler: Sampler | None = None
    rho: float = 0.1
    workers: int = 1

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"family must be one of {FAMILIES}, got {self.family!r}")
        object.__setattr__(self, "method", parse_method(self.method))
        object.__setattr__(self, "targets", tuple(float(t) for t in self.targets))
        object.__setattr__(self, "lambdas", tuple(float(v) for v in self.lambdas))
        if self.sampler is not None:
            object.__setattr__(self, "sampler", Sampler.parse(self.sampler))
        check_count(self.replicates, "replicates", minimum=1)
        check_count(self.n, "n", minimum=2)
        check_count(self.m, "m", minimum=1)
        check_count(self.burn_in, "burn_in", minimum=0)
        check_count(self.workers, "workers", minimum=1)
        if not (0.0 < self.rho < 1.0):
            raise ConfigError("rho must lie in (0, 1)")
        if self.family in ("chisq", "cauchy"):
            if not self.targets:
                raise ConfigError(f"{self.family} experiments need at least one target")
            if any(not (t < 0 and math.isfinite(t)) for t in self.targets):
                raise ConfigError("targets are log10 probabilities and must be negative")
        if self.family == "chisq":
            if self.df is None or int(self.df) < 1:
                raise ConfigError("chisq experiments need df >= 1")
        if self.family in ("quadform", "ratio") and self.q is None:
            raise ConfigError(f"{self.family} experiments need q")
        if self.family == "quadform" and not self.lambdas:
            raise ConfigError("quadform experiments need lambdas")
        if self.method is Method.IMHOF and self.family not in ("chisq", "quadform"):
            raise ConfigError("imhof applies to quadratic forms only")

    def chain_config(self) -> ChainConfig:
        return ChainConfig(burn_in=self.burn_in, n_samples=self.n, sampler=self.sampler, seed=self.seed)


@dataclass(frozen=True)
class _Case:
    problems: tuple[TailProblem, ...]
    truth_log10: float | None
    lambdas: tuple[float, ...] = ()
    q: float | None = None


def build_cases(cfg: ExperimentConfig) -> list[_Case]:
    """One case per report row, in target order."""
    if cfg.family == "chisq":
        cases = []
        lam = (1.0,) * int(cfg.df)
        for t in cfg.targets:
            q = chisq_sf_inv(int(cfg.df), t * _LN10)
            cases.append(_Case((TailProblem.quadratic(lam, q),), t, lam, q))
        return cases
    if cfg.family == "cauchy":
        return [
            _Case(tuple(ratio_to_linear(cauchy_sf_inv(t * _LN10), 1, 1, 0.0, 1.0, True)), t)
            for t in cfg.targets
        ]
    if cfg.family == "quadform":
        return [_Case((TailProblem.quadratic(cfg.lambdas, cfg.q),), cfg.truth_log10_p, cfg.lambdas, cfg.q)]
    problems = ratio_to_linear(cfg.q, cfg.n1, cfg.n2, cfg.mu, cfg.sigma, cfg.two_sided_orthants)
    return [_Case(tuple(problems), cfg.truth_log10_p)]


def replicate_seeds(seed: int, case_index: int, replicates: int) -> list[np.random.SeedSequence]:
    """Independent per-replicate streams; stable under changes to other cases."""
    return np.random.SeedSequence(seed, spawn_key=(case_index,)).spawn(replicates)


def run_replicate(cfg: ExperimentConfig, case: _Case, seed_seq: np.random.SeedSequence) -> TailEstimate:
    """One estimate of one case. Multi-part events get one child stream per part."""
    if cfg.method is Method.IMHOF:
        return imhof_estimate(case.lambdas, case.q)
    parts = []
    chain_cfg = cfg.chain_config()
    for problem, child in zip(case.problems, seed_seq.spawn(len(case.problems))):
        rng = np.random.default_rng(child)
        if cfg.method is Method.MCMC_CE:
            parts.append(mcmc_ce(problem, chain_cfg, cfg.m, rng))
        elif cfg.method is Method.MULTILEVEL_CE:
            parts.append(multilevel_ce(problem, cfg.rho, cfg.n, cfg.m, rng))
        elif problem.constraint.kind == "quad":
            parts.append(brute_force_quadform(problem.constraint.lambdas, problem.constraint.q, cfg.m, rng))
        else:
            parts.append(pilot_mc(problem, cfg.m, rng))
    return parts[0] if len(parts) == 1 else combine_disjoint(parts)


@dataclass(frozen=True)
class MetricsRow:
    """Summary of the replicates for one target; accuracy fields need a known truth."""

    target_log10_p: float | None
    mean_log10_p: float
    ARE: float | None
    SMSE_literal: float | None
    rel_RMSE: float | None
    sd: float | None
    seconds: float | None


@dataclass(frozen=True)
class EstimateRow:
    """A single estimate, as written by the ``estimate`` and ``baseline`` commands."""

    log10_p: float
    p: float
    rel_se: float
    n_proposal_hits: int
    method: str
    status: str
    seconds: float | None

    @classmethod
    def from_estimate(cls, est: TailEstimate, seconds: float | None) -> "EstimateRow":
        return cls(est.log10_p, est.p, est.rel_se, est.n_proposal_hits, est.method.value, est.status, seconds)


def summarize(log_estimates: Sequence[float], truth_log10: float | None, seconds: float | None) -> MetricsRow:
    """Aggregate natural-log replicate estimates into a :class:`MetricsRow`."""
    logs = np.asarray(log_estimates, dtype=float)
    r = logs.size
    if r == 0:
        raise ConfigError("no replicates to summarise")
    mean_log = log_sum_exp(logs) - math.log(r) if np.any(logs > -math.inf) else -math.inf
    ref_log = truth_log10 * _LN10 if truth_log10 is not None else mean_log
    if math.isfinite(ref_log):
        ratio = np.exp(logs - ref_log)
        sd = float(np.std(ratio, ddof=1)) if r > 1 else None
    else:
        ratio = None
        sd = None
    if truth_log10 is None:
        return MetricsRow(None, mean_log / _LN10, None, None, None, sd, seconds)
    mse = float(np.mean((ratio - 1.0) ** 2))
    return MetricsRow(
        target_log10_p=float(truth_log10),
        mean_log10_p=mean_log / _LN10,
        ARE=abs(math.exp(mean_log - ref_log) - 1.0),
        SMSE_literal=10.0**truth_log10 * mse,
        rel_RMSE=math.sqrt(mse),
        sd=sd,
        seconds=seconds,
    )


def _replicate_task(args):
    cfg, case, seq = args
    return run_replicate(cfg, case, seq).log_p


def run_experiment(cfg: ExperimentConfig, *, timing: bool = True) -> list[MetricsRow]:
    """Run every case ``cfg.replicates`` times and summarise each.

    Replicates may fan out over ``cfg.workers`` processes; results are
    collected in replicate order so the report does not depend on scheduling.
    """
    rows = []
    cases = build_cases(cfg)
    pool = ProcessPoolExecutor(cfg.workers) if cfg.workers > 1 else None
    try:
        for idx, case in enumerate(cases):
            start = time.perf_counter()
            if cfg.method is Method.IMHOF:
                # deterministic: one evaluation stands for every replicate
                logs = [run_replicate(cfg, case, None).log_p] * cfg.replicates
            else:
                tasks = [(cfg, case, s) for s in replicate_seeds(cfg.seed, idx, cfg.replicates)]
                mapper = pool.map if pool is not None else map
                logs = list(mapper(_replicate_task, tasks))
            elapsed = time.perf_counter() - start if timing else None
            rows.append(summarize(logs, case.truth_log10, elapsed))
    finally:
        if pool is not None:
            pool.shutdown()
    return rows


# ---------------------------------------------------------------------------
# input files
# ---------------------------------------------------------------------------


def _read_csv(path) -> tuple[list[str], list[list[float]]]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ConfigError(f"{path}: file is empty") from None
    rows = []
    for line_no, raw in enumerate(reader, start=2):
        if not raw or all(not cell.strip() for cell in raw):
            continue
        if len(raw) != len(header):
            raise ConfigError(f"{path}: row {line_no} has {len(raw)} cells, header has {len(header)}")
        row = []
        for col, cell in enumerate(raw, start=1):
            try:
                value = float(cell)
            except ValueError:
                raise ConfigError(f"{path}: row {line_no}, column {col}: {cell!r} is not a number") from None
            if not math.isfinite(value):
                raise ConfigError(f"{path}: row {line_no}, column {col}: value is not finite")
            row.append(value)
        rows.append(row)
    if not rows:
        raise ConfigError(f"{path}: no data rows")
    return [h.strip() for h in header], rows


def load_eigenvalues_csv(path) -> tuple[np.ndarray, float | None]:
    """Eigenvalues from the first column of a headered CSV.

    An optional column named ``q`` or ``q_obs`` supplies the observed statistic
    (its first row is used).
    """
    header, rows = _read_csv(path)
    lambdas = np.array([r[0] for r in rows])
    for line_no, value in enumerate(lambdas, start=2):
        if value <= 0:
            raise ConfigError(f"{path}: row {line_no}: eigenvalue {value!r} is not positive")
    q_obs = None
    lowered = [h.lower() for h in header]
    for name in ("q", "q_obs"):
        if name in lowered:
            q_obs = rows[0][lowered.index(name)]
            break
    return lambdas, q_obs


def load_matrices_csv(features_path, residual_path, weights_path=None):
    """Inputs for :func:`smallp.reduce.quadform_from_matrices` from headered CSVs.

    ``features_path`` holds the n x k matrix, ``residual_path`` a single column
    of length n, and ``weights_path`` (optional) a single column of length k.
    """
    _, z = _read_csv(features_path)
    z = np.array(z)
    _, r = _read_csv(residual_path)
    r = np.array(r)
    if r.shape[1] != 1:
        raise ConfigError(f"{residual_path}: expected one column, found {r.shape[1]}")
    if r.shape[0] != z.shape[0]:
        raise ConfigError(
            f"dimension mismatch: {features_path} has {z.shape[0]} rows, {residual_path} has {r.shape[0]}"
        )
    w = None
    if weights_path is not None:
        _, w = _read_csv(weights_path)
        w = np.array(w)
        if w.shape != (z.shape[1], 1):
            raise ConfigError(
                f"dimension mismatch: {weights_path} should be one column of {z.shape[1]} weights"
            )
        w = w[:, 0]
    return z, r[:, 0], w


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


def format_value(value) -> str:
    """Text form used in CSV reports: 12 significant digits, ``-inf``, empty for missing."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return "%.12g" % v
    return str(value)


def _json_value(value):
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return None
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return float("%.12g" % v)
    if isinstance(value, np.integer):
        return int(value)
    return value


def render_report(rows, fmt: str = "csv") -> str:
    rows = list(rows)
    if not rows:
        raise ConfigError("report has no rows")
    names = [f.name for f in fields(rows[0])]
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(names)
        for row in rows:
            writer.writerow([format_value(getattr(row, n)) for n in names])
        return buf.getvalue()
    if fmt == "json":
        payload = [{n: _json_value(v) for n, v in asdict(row).items()} for row in rows]
        return json.dumps(payload, indent=2) + "\n"
    raise ConfigError(f"unknown report format {fmt!r}")


def emit_report(rows, fmt: str = "csv", path=None) -> str:
    """Render ``rows`` and write them to ``path`` (or return the text when ``path`` is None)."""
    text = render_report(rows, fmt)
    if path is not None:
        try:
            Path(path).write_text(text)
        except OSError as exc:
            raise ConfigError(f"cannot write report to {path}: {exc}") from exc
    return text


def parse_report(text: str, fmt: str = "csv") -> list[dict]:
    """Inverse of :func:`render_report` for checking round trips."""
    if fmt == "json":
        return [
            {k: (float(v) if v in ("inf", "-inf") else v) for k, v in row.items()} for row in json.loads(text)
        ]
    out = []
    for rec in csv.DictReader(io.StringIO(text)):
        parsed = {}
        for k, v in rec.items():
            if v == "":
                parsed[k] = None
            else:
                try:
                    parsed[k] = float(v)
                except ValueError:
                    parsed[k] = v
        out.append(parsed)
    return out


__all__ = [
    "ExperimentConfig",
    "MetricsRow",
    "EstimateRow",
    "build_cases",
    "run_experiment",
    "run_replicate",
    "summarize",
    "load_eigenvalues_csv",
    "load_matrices_csv",
    "emit_report",
    "render_report",
    "parse_report",
    "format_value",
]
