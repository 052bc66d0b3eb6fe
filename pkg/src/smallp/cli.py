"""Command-line interface: ``smallp {estimate,baseline,simulate} ...``.

Exit codes: 0 on success, 2 for invalid input, 3 when a numerical routine fails.
"""

from __future__ import annotations

import argparse
import math
import sys
import time

import numpy as np

from .baselines import brute_force_quadform, brute_force_two_sided_ratio, imhof_estimate
from .ce import combine_disjoint, estimate_tail
from .errors import ConfigError, NumericalError
from .experiment import (
    EstimateRow,
    ExperimentConfig,
    emit_report,
    load_eigenvalues_csv,
    load_matrices_csv,
    parse_method,
    run_experiment,
)
from .model import ChainConfig, Method, Sampler, TailProblem
from .reduce import quadform_from_matrices, ratio_to_linear

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _float_list(text: str) -> list[float]:
    try:
        values = [float(tok) for tok in text.replace(" ", "").split(",") if tok]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _targets(text: str) -> list[float]:
    """Targets as log10 values (``-6,-20``) or probabilities (``1e-6,1e-20``)."""
    out = []
    for v in _float_list(text):
        if 0.0 < v < 1.0:
            out.append(math.log10(v))
        elif v < 0 and math.isfinite(v):
            out.append(v)
        else:
            raise argparse.ArgumentTypeError(f"target {v!r} is neither a probability in (0, 1) nor a negative log10")
    return out


def _add_common(p: argparse.ArgumentParser, *, method_default: str = "mcmc-ce") -> None:
    p.add_argument("--method", default=method_default,
                   help="mcmc-ce | multilevel-ce | imhof | mc (default %(default)s)")
    p.add_argument("--n", type=int, default=10_000, help="MCMC draws (or multilevel sample size) per estimate")
    p.add_argument("--m", type=int, default=10_000, help="importance-sampling (or Monte Carlo) draws")
    p.add_argument("--burn-in", type=int, default=1000)
    p.add_argument("--sampler", choices=["gibbs", "hitrun", "hit_and_run", "hmc"], default=None)
    p.add_argument("--rho", type=float, default=0.1, help="quantile level for multilevel CE")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="write the report here instead of stdout")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--no-timing", action="store_true", help="leave the seconds column empty")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="smallp",
        description="Small tail probabilities of Gaussian quadratic forms and ratios.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    est = sub.add_parser("estimate", help="estimate one tail probability")
    est_sub = est.add_subparsers(dest="kind", required=True)
    quad = est_sub.add_parser("quadform", help="Pr[sum lambda_i Y_i^2 >= q]")
    _add_quadform_inputs(quad)
    _add_common(quad)
    quad.add_argument("--pilot", type=int, default=None,
                      help="plain Monte Carlo screening draws (default: --m; 0 disables)")
    ratio = est_sub.add_parser("ratio", help="Pr[y1 / y2 >= q] for two group means")
    _add_ratio_inputs(ratio)
    _add_common(ratio)
    ratio.add_argument("--pilot", type=int, default=None)

    base = sub.add_parser("baseline", help="reference methods")
    base_sub = base.add_subparsers(dest="kind", required=True)
    im = base_sub.add_parser("imhof", help="Imhof numerical inversion")
    _add_quadform_inputs(im)
    im.add_argument("--out", default=None)
    im.add_argument("--format", choices=["csv", "json"], default="csv")
    im.add_argument("--no-timing", action="store_true")
    mc = base_sub.add_parser("mc", help="brute-force Monte Carlo (quadratic form, or two-sided ratio)")
    _add_quadform_inputs(mc)
    mc.add_argument("--ratio", type=float, default=None, dest="q_ratio",
                    help="two-sided ratio p-value at this observed ratio instead of a quadratic form")
    mc.add_argument("--n1", type=int, default=1)
    mc.add_argument("--n2", type=int, default=1)
    mc.add_argument("--mu", type=float, default=0.0)
    mc.add_argument("--sigma", type=float, default=1.0)
    mc.add_argument("--m", type=int, default=1_000_000)
    mc.add_argument("--seed", type=int, default=0)
    mc.add_argument("--out", default=None)
    mc.add_argument("--format", choices=["csv", "json"], default="csv")
    mc.add_argument("--no-timing", action="store_true")

    sim = sub.add_parser("simulate", help="replicated accuracy study against an exact answer")
    sim_sub = sim.add_subparsers(dest="kind", required=True)
    chi = sim_sub.add_parser("chisq", help="chi-squared tails (identity weights)")
    chi.add_argument("--df", type=int, required=True)
    chi.add_argument("--targets", type=_targets, required=True,
                     help="comma list of probabilities (1e-6,1e-20) or log10 values (use --targets=-6,-20)")
    chi.add_argument("--reps", type=int, default=100)
    chi.add_argument("--workers", type=int, default=1)
    _add_common(chi)
    cau = sim_sub.add_parser("cauchy", help="standard Cauchy tails through the ratio reduction")
    cau.add_argument("--targets", type=_targets, required=True)
    cau.add_argument("--reps", type=int, default=100)
    cau.add_argument("--workers", type=int, default=1)
    _add_common(cau)
    return parser


def _add_quadform_inputs(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lambdas", type=_float_list, default=None, help="comma-separated positive weights")
    p.add_argument("--df", type=int, default=None, help="shorthand for df unit weights")
    p.add_argument("--eigen-file", default=None, help="headered CSV of eigenvalues (optional q column)")
    p.add_argument("--features", default=None, help="headered CSV n x k feature matrix")
    p.add_argument("--residual", default=None, help="headered CSV single column y - mu")
    p.add_argument("--weights", default=None, help="headered CSV single column of k weights")
    p.add_argument("--scale-by-n", action="store_true", help="include the 1/n factor in the statistic")
    p.add_argument("--q", type=float, default=None, help="threshold (observed statistic)")


def _add_ratio_inputs(p: argparse.ArgumentParser) -> None:
    p.add_argument("--q", type=float, required=True, help="observed ratio y1 / y2")
    p.add_argument("--n1", type=int, default=1)
    p.add_argument("--n2", type=int, default=1)
    p.add_argument("--mu", type=float, default=0.0)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--one-orthant", action="store_true",
                   help="only count positive denominators instead of both orthants")


def _quadform_inputs(args) -> tuple[np.ndarray, float]:
    sources = [args.lambdas is not None, args.df is not None, args.eigen_file is not None,
               args.features is not None]
    if sum(sources) != 1:
        raise ConfigError("give exactly one of --lambdas, --df, --eigen-file, --features")
    q = args.q
    if args.lambdas is not None:
        lam = np.asarray(args.lambdas)
    elif args.df is not None:
        if args.df < 1:
            raise ConfigError("--df must be positive")
        lam = np.ones(args.df)
    elif args.eigen_file is not None:
        lam, q_file = load_eigenvalues_csv(args.eigen_file)
        q = q if q is not None else q_file
    else:
        if args.residual is None:
            raise ConfigError("--features needs --residual")
        z, r, w = load_matrices_csv(args.features, args.residual, args.weights)
        lam, q_obs = quadform_from_matrices(z, r, w, args.scale_by_n)
        q = q if q is not None else q_obs
    if q is None:
        raise ConfigError("no threshold: pass --q")
    return lam, float(q)


def _chain_config(args) -> ChainConfig:
    sampler = Sampler.parse(args.sampler) if args.sampler else None
    return ChainConfig(burn_in=args.burn_in, n_samples=args.n, sampler=sampler, seed=args.seed)


def _write(rows, args) -> None:
    text = emit_report(rows, args.format, args.out)
    if args.out is None:
        sys.stdout.write(text)


def _timed(fn):
    start = time.perf_counter()
    result = fn()
    return result, time.perf_counter() - start


def _cmd_estimate(args) -> None:
    method = parse_method(args.method)
    if method is Method.IMHOF:
        raise ConfigError("use 'baseline imhof' for Imhof's method")
    chain_cfg = _chain_config(args)
    rng = np.random.default_rng(args.seed)
    if args.kind == "quadform":
        lam, q = _quadform_inputs(args)
        problems = [TailProblem.quadratic(lam, q)]
    else:
        problems = ratio_to_linear(args.q, args.n1, args.n2, args.mu, args.sigma, not args.one_orthant)

    def run():
        parts = [
            estimate_tail(p, method=method, chain_cfg=chain_cfg, m=args.m, rho=args.rho,
                          pilot_n=args.pilot, rng=child)
            for p, child in zip(problems, rng.spawn(len(problems)))
        ]
        return parts[0] if len(parts) == 1 else combine_disjoint(parts)

    est, secs = _timed(run)
    _write([EstimateRow.from_estimate(est, None if args.no_timing else secs)], args)


def _cmd_baseline(args) -> None:
    if args.kind == "imhof":
        lam, q = _quadform_inputs(args)
        est, secs = _timed(lambda: imhof_estimate(lam, q))
    elif args.q_ratio is not None:
        rng = np.random.default_rng(args.seed)
        est, secs = _timed(lambda: brute_force_two_sided_ratio(
            args.q_ratio, args.n1, args.n2, args.mu, args.sigma, args.m, rng))
    else:
        lam, q = _quadform_inputs(args)
        rng = np.random.default_rng(args.seed)
        est, secs = _timed(lambda: brute_force_quadform(lam, q, args.m, rng))
    _write([EstimateRow.from_estimate(est, None if args.no_timing else secs)], args)


def _cmd_simulate(args) -> None:
    cfg = ExperimentConfig(
        family=args.kind,
        method=args.method,
        targets=tuple(args.targets),
        df=getattr(args, "df", None),
        replicates=args.reps,
        n=args.n,
        m=args.m,
        burn_in=args.burn_in,
        seed=args.seed,
        sampler=args.sampler,
        rho=args.rho,
        workers=args.workers,
    )
    rows = run_experiment(cfg, timing=not args.no_timing)
    _write(rows, args)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {"estimate": _cmd_estimate, "baseline": _cmd_baseline, "simulate": _cmd_simulate}
    try:
        handlers[args.command](args)
    except ConfigError as exc:
        print(f"smallp: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"smallp: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return 0


if __name__ == "__main__":
    sys.exit(main())
