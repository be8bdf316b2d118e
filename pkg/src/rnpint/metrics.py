"""Identification, selection, estimation and prediction metrics."""

from __future__ import annotations

import csv
from dataclasses import asdict, dataclass
from math import nan

import numpy as np
from scipy import stats


@dataclass
class EvalReport:
    tp_ind: float = nan
    fp_ind: float = nan
    tp_var: float = nan
    fp_var: float = nan
    rmise: float = nan
    mae: float = nan
    cstat: float = nan
    logrank: float = nan

    def as_dict(self) -> dict:
        return asdict(self)


# column names used in exported tables
REPORT_COLUMNS = {
    "tp_ind": "TP-ind",
    "fp_ind": "FP-ind",
    "tp_var": "TP-var",
    "fp_var": "FP-var",
    "rmise": "RMISE",
    "mae": "MAE",
    "cstat": "Cstat",
    "logrank": "Logrank",
}


def estimated_same(labels, support, j: int, m1: int, m2: int) -> bool:
    """Same effect: both absent, or both present with the same group label."""
    a, b = bool(support[m1, j]), bool(support[m2, j])
    if not a and not b:
        return True
    return a and b and labels[j, m1] == labels[j, m2]


def pair_metrics(labels, support, truth, signal_range: int | None = None):
    """``(tp_ind, fp_ind)`` over dataset pairs and the first ``signal_range`` covariates.

    Parameters
    ----------
    labels : (p, M) int array of estimated group labels
    support : (M, p) bool array, True where the estimated component is nonzero
    truth : TruthTable
    """
    labels = np.asarray(labels)
    support = np.asarray(support, dtype=bool)
    R = truth.signal_range if signal_range is None else signal_range
    M = support.shape[0]
    tp = fp = 0
    for j in range(R):
        for m1 in range(M):
            for m2 in range(m1 + 1, M):
                if not estimated_same(labels, support, j, m1, m2):
                    continue
                if truth.same(m1, m2, j):
                    tp += 1
                else:
                    fp += 1
    return tp, fp


def var_metrics(support, truth):
    """``(tp_var, fp_var)``: selected components that are truly nonzero / zero."""
    support = np.asarray(support, dtype=bool)
    true_support = truth.support(support.shape[1])
    return int((support & true_support).sum()), int((support & ~true_support).sum())


def rmise(fhat, ftrue):
    """Root of ``sum_m 1/n_m sum_j sum_i (fhat - f)^2`` after centering both.

    ``fhat[m]`` and ``ftrue[m]`` are ``(n_m, p)`` arrays of component values at
    the training points of dataset ``m``.
    """
    total = 0.0
    for fh, ft in zip(fhat, ftrue):
        fh = np.asarray(fh, dtype=float)
        ft = np.asarray(ft, dtype=float)
        d = (fh - fh.mean(axis=0)) - (ft - ft.mean(axis=0))
        total += float((d * d).sum()) / fh.shape[0]
    return float(np.sqrt(total))


def mae(predictions, ys):
    """Per-dataset mean absolute errors, summed over datasets."""
    total = 0.0
    for yhat, y in zip(predictions, ys):
        yhat = np.asarray(yhat, dtype=float).ravel()
        y = np.asarray(y, dtype=float).ravel()
        if yhat.size != y.size:
            raise ValueError(f"{yhat.size} predictions for {y.size} responses")
        total += float(np.mean(np.abs(yhat - y)))
    return total


def cstat(risk, y, delta):
    """Harrell-type concordance of a risk score with censored survival times.

    Comparable pairs have ``delta_i = 1`` and ``y_i < y_j``; a pair is
    concordant when ``risk_i > risk_j`` and ties in risk count one half.
    Returns ``nan`` when there are no comparable pairs.
    """
    risk = np.asarray(risk, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    delta = np.asarray(delta).ravel().astype(bool)
    comparable = delta[:, None] & (y[:, None] < y[None, :])
    n_pairs = comparable.sum()
    if n_pairs == 0:
        return nan
    diff = risk[:, None] - risk[None, :]
    score = (diff > 0) + 0.5 * (diff == 0)
    return float((score * comparable).sum() / n_pairs)


def logrank_statistic(y, delta, group):
    """Two-sample log-rank chi-square statistic (1 df)."""
    y = np.asarray(y, dtype=float).ravel()
    delta = np.asarray(delta).ravel().astype(bool)
    group = np.asarray(group).ravel().astype(bool)
    if group.all() or not group.any():
        raise ValueError("log-rank test needs two nonempty groups")
    event_times = np.unique(y[delta])
    O_minus_E = 0.0
    V = 0.0
    for t in event_times:
        at_risk = y >= t
        n = at_risk.sum()
        n1 = (at_risk & group).sum()
        d = (delta & (y == t)).sum()
        d1 = (delta & (y == t) & group).sum()
        O_minus_E += d1 - d * n1 / n
        if n > 1:
            V += d * (n1 / n) * (1 - n1 / n) * (n - d) / (n - 1)
    if V <= 0:
        return 0.0
    return float(O_minus_E ** 2 / V)


def logrank(scores, y, delta):
    """Log-rank statistic after splitting subjects at the median score."""
    scores = np.asarray(scores, dtype=float).ravel()
    high = scores > np.median(scores)
    return logrank_statistic(y, delta, high)


def logrank_pvalue(stat: float) -> float:
    return float(stats.chi2.sf(stat, df=1))


def write_reports_csv(path, rows, header: str | None = None):
    """``rows`` are dicts with identifying keys followed by EvalReport fields."""
    rows = list(rows)
    with open(path, "w", newline="") as fh:
        if header:
            fh.write(header.rstrip("\n") + "\n")
        if not rows:
            return
        keys = list(rows[0])
        w = csv.writer(fh)
        w.writerow([REPORT_COLUMNS.get(k, k) for k in keys])
        for r in rows:
            w.writerow([_fmt(r[k]) for k in keys])


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v
