"""Command-line interface.

Subcommands: quantile, ppplot, dantzig, stepdown, spectest, montecarlo.
Exit codes: 0 success, 1 usage error, 2 data/validation error, 3 solver
failure. All output files are written atomically; reruns with the same
flags (any --threads value) are byte-identical. Wall-clock timing goes to
stderr only, never into output files.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_SOLVER = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


class SolverFailure(RuntimeError):
    pass


def _build_parser() -> _Parser:
    parser = _Parser(prog="maxinfer", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_required=False):
        p.add_argument("--seed", type=int, default=None, help="default 0")
        p.add_argument("--threads", type=int, default=None,
                       help="worker processes (env MAXINFER_THREADS, then cores)")
        p.add_argument("--out", default=None, required=out_required,
                       help="output directory")

    q = sub.add_parser("quantile", help="multiplier-bootstrap quantile of the max statistic")
    q.add_argument("--input", required=True, help="CSV of observations (rows) x coordinates")
    q.add_argument("--alpha", type=float, required=True, help="quantile level in (0,1)")
    q.add_argument("--reps", type=int, default=1000)
    q.add_argument("--variant", choices=["signed", "absolute"], default="signed")
    q.add_argument("--header", action="store_true", help="input CSV has a header row")
    q.add_argument("--bootstrap", choices=["multiplier", "empirical"], default="multiplier")
    common(q)

    pp = sub.add_parser("ppplot", help="paired CDFs of the max statistic vs its Gaussian analog")
    pp.add_argument("--n", type=int, required=True)
    pp.add_argument("--p", type=int, required=True)
    pp.add_argument("--reps", type=int, default=1000)
    pp.add_argument("--noise", choices=["t4", "t4-unit", "t5-unit", "gaussian"], default="t4")
    common(pp, out_required=True)

    d = sub.add_parser("dantzig", help="fit the l1-minimal estimator with a chosen penalty rule")
    d.add_argument("--input", required=True, help="CSV: first column y, remaining columns design")
    d.add_argument("--header", action="store_true")
    d.add_argument("--penalty", choices=["canonical", "gar", "mb"], default="canonical")
    d.add_argument("--alpha", type=float, default=0.05)
    d.add_argument("--sigma", type=float, default=None, help="noise scale (or upper bound)")
    d.add_argument("--reps", type=int, default=1000, help="bootstrap replications for gar/mb")
    d.add_argument("--residuals", choices=["prelim", "ols"], default="prelim",
                   help="mb residual source: preliminary fit or post-selection OLS")
    d.add_argument("--no-normalize", action="store_true",
                   help="columns already have unit empirical second moment")
    common(d)

    s = sub.add_parser("stepdown", help="stepdown multiple testing with bootstrap critical values")
    s.add_argument("--influence", required=True, help="CSV of influence estimates (n x p)")
    s.add_argument("--betas", required=True, help="CSV with columns beta_hat, beta_null")
    s.add_argument("--alpha", type=float, default=0.05)
    s.add_argument("--reps", type=int, default=1000)
    s.add_argument("--two-sided", action="store_true")
    s.add_argument("--header", action="store_true")
    common(s)

    st = sub.add_parser("spectest", help="adaptive specification test of a linear model")
    st.add_argument("--input", required=True, help="CSV: first column y, remaining columns V")
    st.add_argument("--header", action="store_true")
    st.add_argument("--functions", default=None, help="CSV of raw test-function evaluations")
    st.add_argument("--family-size", type=int, default=None,
                    help="build this many default test functions instead of --functions")
    st.add_argument("--alpha", type=float, default=0.05)
    st.add_argument("--reps", type=int, default=1000)
    common(st)

    mc = sub.add_parser("montecarlo", help="run an experiment described by a JSON config")
    mc.add_argument("--config", required=True)
    mc.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                    help="override a config field")
    common(mc, out_required=True)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE

    try:
        from threadpoolctl import threadpool_limits

        threadpool_limits(1)  # same BLAS behavior for every --threads value
    except Exception:
        pass

    started = time.perf_counter()
    try:
        code = _dispatch(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except SolverFailure as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    print(f"elapsed: {time.perf_counter() - started:.2f}s", file=sys.stderr)
    return code


def _log_config(args, fields, outdir=None):
    """Resolved config (execution knobs like --threads excluded)."""
    from .dataio import dumps_json, write_json

    resolved = {"command": args.command, **fields}
    if outdir is not None:
        write_json(os.path.join(outdir, "run_config.json"), resolved)
    else:
        sys.stderr.write("config: " + dumps_json(resolved))
    return resolved


def _dispatch(args) -> int:
    from . import dataio
    from .parallel import resolve_threads

    threads = resolve_threads(args.threads)
    args.seed_given = getattr(args, "seed", None) is not None
    if getattr(args, "seed", None) is None:
        args.seed = 0

    if args.command == "quantile":
        return _cmd_quantile(args, dataio)
    if args.command == "ppplot":
        return _cmd_ppplot(args, dataio)
    if args.command == "dantzig":
        return _cmd_dantzig(args, dataio)
    if args.command == "stepdown":
        return _cmd_stepdown(args, dataio)
    if args.command == "spectest":
        return _cmd_spectest(args, dataio)
    if args.command == "montecarlo":
        return _cmd_montecarlo(args, dataio, threads)
    raise _UsageError(f"unknown command {args.command!r}")


def _cmd_quantile(args, dataio) -> int:
    from .max_stats import (
        ABSOLUTE_MAX,
        SIGNED_MAX,
        BootstrapConfig,
        empirical_bootstrap_quantile,
        multiplier_bootstrap_quantile,
    )

    if not 0.0 < args.alpha < 1.0:
        raise ValueError("--alpha must be in (0, 1)")
    data = dataio.load_matrix_csv(args.input, header=args.header)
    variant = SIGNED_MAX if args.variant == "signed" else ABSOLUTE_MAX
    config = BootstrapConfig(args.reps, args.seed, variant)
    engine = (
        multiplier_bootstrap_quantile
        if args.bootstrap == "multiplier"
        else empirical_bootstrap_quantile
    )
    est = engine(data, args.alpha, config)

    fields = {
        "input": args.input, "alpha": args.alpha, "reps": args.reps,
        "seed": args.seed, "variant": args.variant, "bootstrap": args.bootstrap,
        "header": args.header,
    }
    replicates_path = None
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        replicates_path = os.path.join(args.out, "replicates.csv")
        dataio.write_replicates_csv(replicates_path, est)
        _log_config(args, fields, args.out)
        dataio.write_json(
            os.path.join(args.out, "quantile.json"),
            dataio.quantile_estimate_json(est, "replicates.csv"),
        )
    else:
        _log_config(args, fields)
    sys.stdout.write(dataio.dumps_json(dataio.quantile_estimate_json(est, replicates_path)))
    return EXIT_OK


def _cmd_ppplot(args, dataio) -> int:
    from .experiments import NoiseKind, run_ppplot

    noise = {
        "t4": (NoiseKind.STUDENT_T4, False),
        "t4-unit": (NoiseKind.STUDENT_T4, True),
        "t5-unit": (NoiseKind.STUDENT_T5_NORMALIZED, False),
        "gaussian": (NoiseKind.GAUSSIAN, False),
    }[args.noise]
    data = run_ppplot(args.n, args.p, args.reps, args.seed, noise[0], unit_variance=noise[1])
    os.makedirs(args.out, exist_ok=True)
    dataio.write_csv(
        os.path.join(args.out, "ppplot.csv"),
        ["cdf_stat", "cdf_gaussian"],
        zip(data.cdf_stat, data.cdf_gaussian),
    )
    fields = {"n": args.n, "p": args.p, "reps": args.reps, "seed": args.seed, "noise": args.noise}
    _log_config(args, fields, args.out)
    dataio.write_json(os.path.join(args.out, "summary.json"), {"ks": data.ks, **fields})
    sys.stdout.write(dataio.dumps_json({"ks": data.ks}))
    return EXIT_OK


def _load_regression(args, dataio):
    from .dantzig import RegressionData

    raw = dataio.load_matrix_csv(args.input, header=args.header)
    if raw.shape[1] < 2:
        raise ValueError("need at least two columns (y plus one regressor)")
    y, z = raw[:, 0], raw[:, 1:]
    if args.no_normalize:
        return RegressionData(z, y)
    return RegressionData.normalize(z, y)


def _cmd_dantzig(args, dataio) -> int:
    from .dantzig import (
        PenaltyKind,
        PenaltySpec,
        ResidualMode,
        fit_with_penalty,
    )
    from .lp import LpStatus
    from .max_stats import BootstrapConfig

    data = _load_regression(args, dataio)
    kind = {
        "canonical": PenaltyKind.CANONICAL,
        "gar": PenaltyKind.GAR,
        "mb": PenaltyKind.MULTIPLIER_BOOTSTRAP,
    }[args.penalty]
    if args.sigma is None:
        raise ValueError("--sigma is required")
    spec = PenaltySpec(
        kind=kind,
        alpha=args.alpha,
        sigma=args.sigma,
        bootstrap=BootstrapConfig(args.reps, args.seed),
        residual_mode=(
            ResidualMode.POST_SELECTION_OLS if args.residuals == "ols"
            else ResidualMode.PRELIM_DANTZIG
        ),
    )
    result = fit_with_penalty(data, spec)
    if result.lp_status is not LpStatus.OPTIMAL:
        raise SolverFailure(f"LP ended with status {result.lp_status.value}")

    fields = {
        "input": args.input, "penalty": args.penalty, "alpha": args.alpha,
        "sigma": args.sigma, "reps": args.reps, "seed": args.seed,
        "residuals": args.residuals, "header": args.header,
        "normalize": not args.no_normalize,
    }
    payload = dataio.dantzig_result_json(result)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        _log_config(args, fields, args.out)
        dataio.write_json(os.path.join(args.out, "dantzig.json"), payload)
    else:
        _log_config(args, fields)
    sys.stdout.write(dataio.dumps_json(payload))
    return EXIT_OK


def _cmd_stepdown(args, dataio) -> int:
    import math

    from .max_stats import BootstrapConfig
    from .stepdown import MhtProblem, run_stepdown

    influence = dataio.load_matrix_csv(args.influence, header=args.header)
    betas = dataio.load_matrix_csv(args.betas, header=args.header)
    if betas.shape[1] != 2:
        raise ValueError("--betas CSV must have exactly two columns (beta_hat, beta_null)")
    problem = MhtProblem(
        beta_hat=betas[:, 0],
        beta_null=betas[:, 1],
        influence=influence,
        two_sided=args.two_sided,
    )
    config = BootstrapConfig(args.reps, args.seed)
    result = run_stepdown(problem, args.alpha, config)
    t = math.sqrt(problem.n) * (problem.beta_hat - problem.beta_null)
    if args.two_sided:
        t = np.abs(t)

    fields = {
        "influence": args.influence, "betas": args.betas, "alpha": args.alpha,
        "reps": args.reps, "seed": args.seed, "two_sided": args.two_sided,
        "header": args.header,
    }
    payload = dataio.stepdown_result_json(result)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        _log_config(args, fields, args.out)
        dataio.write_json(os.path.join(args.out, "stepdown.json"), payload)
        dataio.write_csv(
            os.path.join(args.out, "hypotheses.csv"),
            ["hypothesis", "t_stat", "rejected", "step"],
            dataio.stepdown_rows(result, t),
        )
    else:
        _log_config(args, fields)
    sys.stdout.write(dataio.dumps_json(payload))
    return EXIT_OK


def _cmd_spectest(args, dataio) -> int:
    from .max_stats import BootstrapConfig
    from .spectest import SpecTestInput, default_test_functions, run_spec_test

    raw = dataio.load_matrix_csv(args.input, header=args.header)
    if raw.shape[1] < 2:
        raise ValueError("need at least two columns (y plus one regressor)")
    y, v = raw[:, 0], raw[:, 1:]
    if (args.functions is None) == (args.family_size is None):
        raise ValueError("give exactly one of --functions or --family-size")
    if args.functions is not None:
        praw = dataio.load_matrix_csv(args.functions, header=args.header)
    else:
        praw = default_test_functions(v, args.family_size)
    result = run_spec_test(
        SpecTestInput(v, y, praw), args.alpha, BootstrapConfig(args.reps, args.seed)
    )

    fields = {
        "input": args.input, "functions": args.functions,
        "family_size": args.family_size, "alpha": args.alpha,
        "reps": args.reps, "seed": args.seed, "header": args.header,
    }
    payload = {
        "statistic": result.statistic,
        "critical_value": result.critical_value,
        "reject": result.reject,
        "per_function_scores": result.per_function_scores,
        "dropped_functions": result.dropped_functions,
        "degenerate_functions": result.degenerate_functions,
    }
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        _log_config(args, fields, args.out)
        dataio.write_json(os.path.join(args.out, "spectest.json"), payload)
    else:
        _log_config(args, fields)
    sys.stdout.write(dataio.dumps_json(payload))
    return EXIT_OK


def _parse_override(text: str):
    if "=" not in text:
        raise _UsageError(f"--set expects KEY=VALUE, got {text!r}")
    key, value = text.split("=", 1)
    try:
        return key, json.loads(value)
    except json.JSONDecodeError:
        return key, value


def _cmd_montecarlo(args, dataio, threads: int) -> int:
    with open(args.config, "r", encoding="utf-8") as fh:
        config = json.load(fh)
    for item in args.set:
        key, value = _parse_override(item)
        config[key] = value
    if args.seed_given:
        config["seed"] = args.seed
    experiment = config.pop("experiment", None)
    if experiment is None:
        raise ValueError("config must name an 'experiment'")

    os.makedirs(args.out, exist_ok=True)
    runner = {
        "dantzig_table": _mc_dantzig_table,
        "coverage": _mc_coverage,
        "fwer": _mc_fwer,
        "ppplot": _mc_ppplot,
    }.get(experiment)
    if runner is None:
        raise ValueError(f"unknown experiment {experiment!r}")
    summary = runner(config, args.out, threads, dataio)
    _log_config(args, {"experiment": experiment, **config}, args.out)
    dataio.write_json(os.path.join(args.out, "summary.json"), summary)
    sys.stdout.write(dataio.dumps_json(summary))
    return EXIT_OK


def _mc_dantzig_table(config: dict, out: str, threads: int, dataio) -> dict:
    from .dantzig import PenaltyKind
    from .experiments import McDesign, NoiseKind, run_dantzig_table

    penalties = [
        {"canonical": PenaltyKind.CANONICAL, "gar": PenaltyKind.GAR,
         "mb": PenaltyKind.MULTIPLIER_BOOTSTRAP}[name]
        for name in config.pop("penalties", ["canonical", "gar", "mb"])
    ]
    design = McDesign(
        n=config["n"], p=config["p"], rho=config["rho"], sigma0=config["sigma0"],
        noise=NoiseKind(config.get("noise", "t5_normalized")),
        gamma=config.get("gamma", 0.0), reps=config["reps"], seed=config.get("seed", 0),
        sparsity=config.get("sparsity", 5), alpha=config.get("alpha", 0.05),
        penalty_reps=config.get("penalty_reps", 500),
    )
    cell = run_dantzig_table(design, penalties, threads=threads)
    dataio.write_csv(
        os.path.join(out, "table.csv"),
        ["penalty", "mean_prediction_error", "reps_used", "lp_failures"],
        (
            (name, cell.mean_errors[name], len(cell.errors[name]), cell.lp_failures[name])
            for name in cell.mean_errors
        ),
    )
    return {"mean_errors": cell.mean_errors, "lp_failures": cell.lp_failures}


def _mc_coverage(config: dict, out: str, threads: int, dataio) -> dict:
    from .experiments import CoverageConfig, CoverageData, run_coverage

    cfg = CoverageConfig(
        n=config["n"], p=config["p"], alpha=config.get("alpha", 0.05),
        outer_reps=config["outer_reps"], inner_reps=config["inner_reps"],
        seed=config.get("seed", 0),
        data=CoverageData(config.get("data", "bounded_mixture")),
    )
    coverage = run_coverage(cfg, threads=threads)
    return {"coverage": coverage, "target": 1.0 - cfg.alpha}


def _mc_fwer(config: dict, out: str, threads: int, dataio) -> dict:
    from .experiments import FwerConfig, run_fwer

    cfg = FwerConfig(
        n=config["n"], p_true=config["p_true"], alpha=config.get("alpha", 0.05),
        rho=config.get("rho", 0.0), outer_reps=config["outer_reps"],
        inner_reps=config["inner_reps"], seed=config.get("seed", 0),
        p_false=config.get("p_false", 0), effect=config.get("effect", 0.0),
    )
    result = run_fwer(cfg, threads=threads)
    return {"fwer": result.fwer, "false_null_power": result.false_null_power}


def _mc_ppplot(config: dict, out: str, threads: int, dataio) -> dict:
    from .experiments import NoiseKind, run_ppplot

    data = run_ppplot(
        n=config["n"], p=config["p"], reps=config["reps"], seed=config.get("seed", 0),
        noise=NoiseKind(config.get("noise", "t4")),
        unit_variance=config.get("unit_variance", False),
    )
    dataio.write_csv(
        os.path.join(out, "ppplot.csv"),
        ["cdf_stat", "cdf_gaussian"],
        zip(data.cdf_stat, data.cdf_gaussian),
    )
    return {"ks": data.ks}


if __name__ == "__main__":
    sys.exit(main())
