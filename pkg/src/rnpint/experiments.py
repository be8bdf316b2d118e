"""Replicated method comparisons on simulated or user data."""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace

import numpy as np

from .baselines import fit_method, method_spec
from .core import FitConfig, FitResult, predict
from .metrics import REPORT_COLUMNS, EvalReport, cstat, logrank, mae, pair_metrics, rmise, var_metrics
from .simulate import ScenarioSpec, TruthTable, simulate_train_test, truth
from .tuning import TuneSpec, tune_lambda


def component_values(result: FitResult, data) -> list:
    """Estimated components at the rows of ``data``: one ``(n_m, p)`` array per dataset."""
    out = []
    for m, d in enumerate(data):
        B = result.basis.transform(d.X, m)
        out.append(np.einsum("jnk,jk->nj", B, result.state.beta[m]))
    return out


def true_component_values(table: TruthTable, data) -> list:
    return [np.column_stack([table.evaluate(m, j, d.X[:, j]) for j in range(d.p)])
            for m, d in enumerate(data)]


def evaluate_fit(result: FitResult, table: TruthTable | None = None, train=None, test=None) -> EvalReport:
    """Fill whatever metrics the inputs allow.

    Identification and selection counts and RMISE need the truth (RMISE is
    taken at the ``train`` rows); MAE, C-statistic and log-rank need ``test``.
    For survival data the risk score is the negative predicted log-time, and
    C-statistic and log-rank are averaged over datasets.
    """
    rep = EvalReport()
    st = result.state
    if table is not None:
        rep.tp_ind, rep.fp_ind = pair_metrics(st.group_labels, st.updated, table)
        rep.tp_var, rep.fp_var = var_metrics(st.updated, table)
        if train is not None:
            rep.rmise = rmise(component_values(result, train), true_component_values(table, train))
    if test is not None:
        pred = predict(result, test)
        if test[0].delta is None:
            rep.mae = mae(pred, [d.y for d in test])
        else:
            rep.cstat = float(np.nanmean([cstat(-yh, d.y, d.delta) for yh, d in zip(pred, test)]))
            rep.logrank = float(np.mean([_safe_logrank(-yh, d) for yh, d in zip(pred, test)]))
    return rep


def _safe_logrank(score, d):
    try:
        return logrank(score, d.y, d.delta)
    except ValueError:
        return np.nan


@dataclass(frozen=True)
class BenchJob:
    """One replicate: data generation or splitting, then every method."""

    replicate: int
    seed: int
    methods: tuple
    config: FitConfig
    scenario: ScenarioSpec | None = None
    n_test: int = 100
    data: tuple | None = None
    holdout: float = 0.2
    tune: TuneSpec | None = None


def holdout_split(data, fraction: float, seed: int):
    """Random per-dataset train/test split with ``round(fraction * n)`` test rows."""
    rng = np.random.default_rng(seed)
    train, test = [], []
    for d in data:
        n_test = int(round(fraction * d.n))
        if not 0 < n_test < d.n:
            raise ValueError(f"holdout {fraction} leaves an empty split for dataset {d.id!r}")
        perm = rng.permutation(d.n)
        train.append(d.take(np.sort(perm[n_test:])))
        test.append(d.take(np.sort(perm[:n_test])))
    return train, test


def run_job(job: BenchJob) -> list:
    if job.scenario is not None:
        spec = replace(job.scenario, seed=job.seed)
        train, test = simulate_train_test(spec, n_test=job.n_test)
        table = truth(spec.scenario)
    else:
        train, test = holdout_split(job.data, job.holdout, job.seed)
        table = None
    rows = []
    for method in job.methods:
        ms = method_spec(method)
        cfg = job.config
        if job.tune is not None and ms.integration == "joint":
            tspec = replace(job.tune, seed=job.seed)
            lam, _ = tune_lambda(train, cfg, tspec, method=ms.method)
            cfg = replace(cfg, lam=lam)
        res = fit_method(train, cfg, ms.method)
        rep = evaluate_fit(res, table, train, test)
        rows.append({"replicate": job.replicate, "seed": job.seed, "method": ms.label,
                     "lambda": float(res.config.lam), "t_star": res.t_star, **asdict(rep)})
    return rows


def run_bench(jobs, n_jobs: int = 1) -> list:
    """Run replicate jobs, in worker processes when ``n_jobs > 1``.

    Rows come back ordered by replicate, then method, whatever the
    completion order.
    """
    jobs = list(jobs)
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as ex:
            results = list(ex.map(run_job, jobs))
    else:
        results = [run_job(j) for j in jobs]
    return [row for rows in results for row in rows]


def scenario_jobs(template: ScenarioSpec, methods, config: FitConfig, replicates: int, seed: int,
                  n_test: int = 100, tune: TuneSpec | None = None) -> list:
    """Replicate ``r`` uses seed ``seed + r``."""
    return [BenchJob(replicate=r + 1, seed=seed + r, methods=tuple(methods), config=config,
                     scenario=template, n_test=n_test, tune=tune)
            for r in range(replicates)]


def holdout_jobs(data, methods, config: FitConfig, replicates: int, seed: int, holdout: float = 0.2,
                 tune: TuneSpec | None = None) -> list:
    return [BenchJob(replicate=r + 1, seed=seed + r, methods=tuple(methods), config=config,
                     data=tuple(data), holdout=holdout, tune=tune)
            for r in range(replicates)]


METRICS = tuple(REPORT_COLUMNS)


def summarize(rows) -> list:
    """Mean and sample standard deviation of every metric, per method."""
    methods = list(dict.fromkeys(r["method"] for r in rows))
    out = []
    for meth in methods:
        sub = [r for r in rows if r["method"] == meth]
        rec = {"method": meth, "replicates": len(sub)}
        for key in METRICS:
            vals = np.array([r[key] for r in sub], dtype=float)
            vals = vals[~np.isnan(vals)]
            if vals.size == 0:
                rec[key] = (np.nan, np.nan)
            else:
                sd = float(vals.std(ddof=1)) if vals.size > 1 else 0.0
                rec[key] = (float(vals.mean()), sd)
        out.append(rec)
    return out


def format_mean_sd(pair, digits: int = 2) -> str:
    m, s = pair
    if np.isnan(m):
        return "NA"
    return f"{m:.{digits}f} ({s:.{digits}f})"


def write_summary_csv(path, summary, header: str | None = None, digits: int = 2):
    with open(path, "w", newline="") as fh:
        if header:
            fh.write(header.rstrip("\n") + "\n")
        w = csv.writer(fh)
        w.writerow(["method", "replicates"] + [REPORT_COLUMNS[k] for k in METRICS])
        for rec in summary:
            w.writerow([rec["method"], rec["replicates"]] + [format_mean_sd(rec[k], digits) for k in METRICS])


def write_replicates_csv(path, rows, header: str | None = None):
    with open(path, "w", newline="") as fh:
        if header:
            fh.write(header.rstrip("\n") + "\n")
        if not rows:
            return
        keys = list(rows[0])
        w = csv.writer(fh)
        w.writerow([REPORT_COLUMNS.get(k, k) for k in keys])
        for r in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in (r[k] for k in keys)])
