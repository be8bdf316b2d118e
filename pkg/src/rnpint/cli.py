"""Command line entry point: ``rnpint {simulate,fit,tune,evaluate,bench}``.

Every subcommand accepts ``--config FILE`` with ``key = value`` lines using
the long flag names (``lambda = 0.25``, ``methods = rnp_int,rnp_pool``).
Flags given on the command line win over the file.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import io as rio
from .basis import BasisConfig
from .baselines import METHODS, fit_method, method_spec
from .core import CONTINUOUS, SURVIVAL, FitConfig, write_trace_csv
from .experiments import (
    evaluate_fit,
    holdout_jobs,
    run_bench,
    scenario_jobs,
    summarize,
    write_replicates_csv,
    write_summary_csv,
)
from .loss import LossSpec
from .metrics import write_reports_csv
from .simulate import ScenarioSpec, read_truth_csv, simulate, truth, write_truth_csv
from .state import write_coefficients_csv
from .tuning import DEFAULT_GRID, TuneSpec, tune_lambda, write_cv_csv, write_cv_curve_csv

DEFAULTS = {
    "method": "rnp_int",
    "outcome": "continuous",
    "lambda": 0.25,
    "c": 1.0,
    "v": 0.1,
    "T": 300,
    "K": 6,
    "seed": 0,
    "scenario": 1,
    "error": "normal",
    "p": 200,
    "n": "100,100,100",
    "rho": 0.5,
    "target_censoring": 0.2,
    "folds": 5,
    "lambda_grid": ",".join(repr(x) for x in DEFAULT_GRID),
    "methods": "rnp_int",
    "replicates": 1,
    "holdout": 0.2,
    "n_test": 100,
    "jobs": 1,
    "out": ".",
    "grid_points": 100,
    "tune": False,
    "standardize": None,
    "screen": None,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _common(sp, *groups):
    sp.add_argument("--config", help="key = value file; command line flags take precedence")
    sp.add_argument("--out", help="output directory (default: current)")
    sp.add_argument("--seed", type=int)
    if "model" in groups:
        sp.add_argument("--method", choices=sorted(METHODS))
        sp.add_argument("--outcome", choices=["continuous", "survival"])
        sp.add_argument("--lambda", dest="lambda", type=float)
        sp.add_argument("--c", type=float, help="Cauchy loss scale")
        sp.add_argument("--v", type=float, help="step size")
        sp.add_argument("--T", type=int, help="boosting iterations")
        sp.add_argument("--K", type=int, help="basis functions per covariate")
    if "input" in groups:
        sp.add_argument("--input", help="comma separated CSV files, one per dataset")
        sp.add_argument("--standardize", choices=["zscore", "unit_range"])
        sp.add_argument("--screen", type=int, help="keep this many covariates after marginal screening")
    if "scenario" in groups:
        sp.add_argument("--scenario", type=int, choices=[1, 2, 3, 4])
        sp.add_argument("--error", choices=["normal", "mix7030", "cauchy"])
        sp.add_argument("--p", type=int)
        sp.add_argument("--n", help="per-dataset sizes, e.g. 100,100,100")
        sp.add_argument("--rho", type=float)
        sp.add_argument("--target-censoring", dest="target_censoring", type=float)
    if "tune" in groups:
        sp.add_argument("--lambda-grid", dest="lambda_grid", help="comma separated positive values")
        sp.add_argument("--folds", type=int)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="rnpint", description="Robust integrative sparse boosting")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)

    sp = sub.add_parser("simulate", help="write scenario datasets and a truth sidecar")
    _common(sp, "scenario")
    sp.add_argument("--outcome", choices=["continuous", "survival"])

    sp = sub.add_parser("fit", help="fit one model and export coefficients, trace and function grids")
    _common(sp, "model", "input")
    sp.add_argument("--grid-points", dest="grid_points", type=int)

    sp = sub.add_parser("tune", help="cross-validate lambda")
    _common(sp, "model", "input", "tune")

    sp = sub.add_parser("evaluate", help="score a saved model on data")
    sp.add_argument("--config")
    sp.add_argument("--out")
    sp.add_argument("--model", help="model.json written by fit")
    sp.add_argument("--input", help="comma separated CSV files to score")
    sp.add_argument("--train", help="training CSVs for RMISE (defaults to --input)")
    sp.add_argument("--truth", help="truth sidecar written by simulate")
    sp.add_argument("--standardize", choices=["zscore", "unit_range"])

    sp = sub.add_parser("bench", help="replicated comparison of several methods")
    _common(sp, "model", "input", "scenario", "tune")
    sp.add_argument("--methods", help="comma separated method keys")
    sp.add_argument("--replicates", type=int)
    sp.add_argument("--holdout", type=float, help="test fraction when splitting --input data")
    sp.add_argument("--n-test", dest="n_test", type=int, help="test rows per simulated dataset")
    sp.add_argument("--tune", action="store_true", default=None, help="cross-validate lambda per replicate")
    sp.add_argument("--jobs", type=int, help="worker processes")
    return ap


def resolve(args) -> dict:
    """Merge command line, config file and defaults, in that order of priority."""
    opts = {k: v for k, v in vars(args).items() if v is not None}
    if "config" in opts:
        for k, v in rio.read_config_file(opts["config"]).items():
            opts.setdefault(k, v)
    for k, v in DEFAULTS.items():
        opts.setdefault(k, v)
    casts = {"lambda": float, "c": float, "v": float, "T": int, "K": int, "seed": int,
             "scenario": int, "p": int, "rho": float, "target_censoring": float, "folds": int,
             "replicates": int, "holdout": float, "n_test": int, "jobs": int, "grid_points": int}
    for k, f in casts.items():
        try:
            opts[k] = f(opts[k])
        except (TypeError, ValueError):
            raise UsageError(f"option {k!r}: cannot read {opts[k]!r} as {f.__name__}") from None
    if opts.get("screen") is not None:
        opts["screen"] = int(opts["screen"])
    if isinstance(opts["tune"], str):
        opts["tune"] = opts["tune"].lower() in ("1", "true", "yes")
    return opts


def fit_config(o) -> FitConfig:
    outcome = SURVIVAL if o["outcome"] == "survival" else CONTINUOUS
    return FitConfig(loss=LossSpec("cauchy", o["c"]), lam=o["lambda"], v=o["v"], T=o["T"],
                     basis=BasisConfig(K=o["K"]), outcome=outcome)


def scenario_spec(o) -> ScenarioSpec:
    n = tuple(int(x) for x in str(o["n"]).split(","))
    return ScenarioSpec(scenario=o["scenario"], n=n if len(n) > 1 else n[0], p=o["p"], rho=o["rho"],
                        error=o["error"], outcome=o["outcome"], target_censoring=o["target_censoring"],
                        seed=o["seed"])


def _paths(value) -> list:
    if not value:
        raise UsageError("--input is required")
    return [s.strip() for s in str(value).split(",") if s.strip()]


def load_inputs(o, key="input"):
    data = rio.load_csv(_paths(o.get(key)), o["outcome"])
    if o.get("standardize"):
        data, _ = rio.standardize(data, o["standardize"])
    if o.get("screen"):
        data, ranking = rio.screen_covariates(data, o["screen"])
        return data, ranking
    return data, None


def _outdir(o) -> str:
    os.makedirs(o["out"], exist_ok=True)
    return o["out"]


def _path(o, name) -> str:
    return os.path.join(_outdir(o), name)


# ---------------------------------------------------------------------------


def cmd_simulate(o) -> int:
    spec = scenario_spec(o)
    data = simulate(spec)
    head = rio.metadata_line(command="simulate", scenario=spec.scenario, error=spec.error,
                             outcome=spec.outcome, p=spec.p, rho=spec.rho, seed=spec.seed)
    for m, d in enumerate(data, start=1):
        rio.write_dataset_csv(_path(o, f"dataset{m}.csv"), d, header=head)
    write_truth_csv(_path(o, "truth.csv"), truth(spec.scenario), p=spec.p, header=head)
    return 0


def cmd_fit(o) -> int:
    data, ranking = load_inputs(o)
    cfg = fit_config(o)
    res = fit_method(data, cfg, o["method"])
    meta = rio.config_metadata(res.config, res.method, o["seed"])
    head = rio.metadata_line(command="fit", **meta)
    write_coefficients_csv(_path(o, "coefficients.csv"), res.state, res.covariate_names, header=head)
    if res.trace:
        write_trace_csv(_path(o, "trace.csv"), res, header=head)
    rio.write_function_grid_csv(_path(o, "function_grid.csv"), res, o["grid_points"], header=head)
    rio.save_model(_path(o, "model.json"), res, metadata=meta)
    if ranking is not None:
        rio.write_ranking_csv(_path(o, "screening.csv"), ranking, header=head)
    print(f"{res.method}: t*={res.t_star}, selected {int(res.state.updated.any(axis=0).sum())} covariates")
    return 0


def _tune_spec(o) -> TuneSpec:
    grid = tuple(float(x) for x in str(o["lambda_grid"]).split(","))
    return TuneSpec(lambda_grid=grid, folds=o["folds"], c=o["c"], seed=o["seed"])


def cmd_tune(o) -> int:
    data, _ = load_inputs(o)
    spec = _tune_spec(o)
    best, curve = tune_lambda(data, fit_config(o), spec, method=o["method"])
    head = rio.metadata_line(command="tune", method=method_spec(o["method"]).label, seed=o["seed"],
                             folds=spec.folds, c=spec.c, v=o["v"], T=o["T"], K=o["K"],
                             score=curve.score_name.replace(" ", "_"), best_lambda=best)
    write_cv_csv(_path(o, "cv_folds.csv"), curve, header=head)
    write_cv_curve_csv(_path(o, "cv_curve.csv"), curve, header=head)
    print(f"best lambda: {best!r}")
    return 0


def cmd_evaluate(o) -> int:
    if not o.get("model"):
        raise UsageError("--model is required")
    res = rio.load_model(o["model"])
    o = {**o, "outcome": "survival" if res.config.outcome == SURVIVAL else "continuous"}
    data, _ = load_inputs({**o, "screen": None})
    train = data
    if o.get("train"):
        train, _ = load_inputs({**o, "screen": None}, key="train")
    names = res.covariate_names
    if data[0].covariate_names != names:
        try:
            data = [d.with_columns([d.covariate_names.index(c) for c in names]) for d in data]
            train = [d.with_columns([d.covariate_names.index(c) for c in names]) for d in train]
        except ValueError:
            raise UsageError("input covariates do not match the model") from None
    table = read_truth_csv(o["truth"]) if o.get("truth") else None
    rep = evaluate_fit(res, table, train if table is not None else None, data)
    head = rio.metadata_line(command="evaluate", method=res.method, model=os.path.basename(o["model"]))
    write_reports_csv(_path(o, "report.csv"), [{"method": res.method, **rep.as_dict()}], header=head)
    return 0


def cmd_bench(o, explicit) -> int:
    if "seed" not in explicit:
        raise UsageError("bench needs an explicit --seed")
    methods = [method_spec(m).method for m in str(o["methods"]).split(",") if m.strip()]
    cfg = fit_config(o)
    tune = _tune_spec(o) if o["tune"] else None
    if o.get("input"):
        data, _ = load_inputs(o)
        jobs = holdout_jobs(data, methods, cfg, o["replicates"], o["seed"], o["holdout"], tune)
        source = {"input": o["input"], "holdout": o["holdout"]}
    else:
        spec = scenario_spec(o)
        jobs = scenario_jobs(spec, methods, cfg, o["replicates"], o["seed"], o["n_test"], tune)
        source = {"scenario": spec.scenario, "error": spec.error, "p": spec.p, "n_test": o["n_test"]}
    rows = run_bench(jobs, o["jobs"])
    head = rio.metadata_line(command="bench", methods=",".join(methods), seed=o["seed"],
                             replicates=o["replicates"], outcome=o["outcome"],
                             **{"lambda": "cv" if tune else float(o["lambda"])},
                             c=o["c"], v=o["v"], T=o["T"], K=o["K"], **source)
    write_replicates_csv(_path(o, "bench_replicates.csv"), rows, header=head)
    write_summary_csv(_path(o, "bench_summary.csv"), summarize(rows), header=head)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("rnpint: a subcommand is required (simulate, fit, tune, evaluate, bench)")
        explicit = {k for k, v in vars(args).items() if v is not None}
        o = resolve(args)
        if o.get("config"):
            explicit |= set(rio.read_config_file(o["config"]))
        cmd = args.command
        if cmd == "simulate":
            return cmd_simulate(o)
        if cmd == "fit":
            return cmd_fit(o)
        if cmd == "tune":
            return cmd_tune(o)
        if cmd == "evaluate":
            return cmd_evaluate(o)
        return cmd_bench(o, explicit)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"rnpint: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
