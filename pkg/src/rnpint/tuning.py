"""Cross-validated choice of the commonality penalty ``lam``."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np

from .core import SURVIVAL, FitConfig, predict
from .loss import km_weights

DEFAULT_GRID = tuple(2.0 ** k for k in range(-6, 0))


@dataclass(frozen=True)
class TuneSpec:
    lambda_grid: tuple = DEFAULT_GRID
    folds: int = 5
    c: float = 1.0
    seed: int = 0

    def __post_init__(self):
        grid = tuple(float(x) for x in self.lambda_grid)
        object.__setattr__(self, "lambda_grid", grid)
        if self.folds < 2:
            raise ValueError("need at least 2 folds")
        if not grid:
            raise ValueError("lambda grid is empty")
        if any(not np.isfinite(x) or x <= 0 for x in grid):
            raise ValueError("lambda grid values must be positive")


@dataclass
class CVCurve:
    lambdas: np.ndarray
    scores: np.ndarray  # (n_lambda, folds)
    best_index: int
    score_name: str = "MAE"
    meta: dict = field(default_factory=dict)

    @property
    def mean_scores(self) -> np.ndarray:
        return self.scores.mean(axis=1)

    @property
    def best_lambda(self) -> float:
        return float(self.lambdas[self.best_index])


def cv_split(sizes, folds: int = 5, seed: int = 0) -> list:
    """Fold index of every row, per dataset.

    Rows of each dataset are shuffled and dealt round-robin, so fold sizes
    within a dataset differ by at most one.
    """
    sizes = [int(n) for n in sizes]
    if folds < 2:
        raise ValueError("need at least 2 folds")
    for m, n in enumerate(sizes):
        if n < folds:
            raise ValueError(f"dataset {m} has {n} rows, fewer than {folds} folds")
    rng = np.random.default_rng(seed)
    out = []
    for n in sizes:
        perm = rng.permutation(n)
        f = np.empty(n, dtype=np.int64)
        f[perm] = np.arange(n) % folds
        out.append(f)
    return out


def validation_score(predictions, data) -> float:
    """Sum over datasets of the per-dataset absolute error.

    Continuous data: plain mean absolute error. Survival data: absolute
    error on log-time weighted by Kaplan-Meier weights, so only observed
    events contribute.
    """
    total = 0.0
    for yhat, d in zip(predictions, data):
        err = np.abs(np.asarray(yhat) - d.y)
        if d.delta is None:
            total += float(err.mean())
            continue
        w = km_weights(d.y, d.delta)
        if w.sum() > 0:
            total += float(np.dot(w, err) / w.sum())
    return total


def tune_lambda(data, config: FitConfig = FitConfig(), spec: TuneSpec = TuneSpec(),
                method: str = "rnp_int"):
    """Grid search over ``spec.lambda_grid`` by K-fold cross-validation.

    The basis is rebuilt on every training split, so validation rows never
    influence knots or centering. Returns ``(best_lambda, CVCurve)``; ties go
    to the first grid entry with the minimal mean score.
    """
    from .baselines import fit_method

    data = list(data)
    assignment = cv_split([d.n for d in data], spec.folds, spec.seed)
    base = replace(config, loss=replace(config.loss, c=spec.c))
    grid = np.array(spec.lambda_grid)
    scores = np.empty((grid.size, spec.folds))
    for k in range(spec.folds):
        train = [d.take(np.nonzero(a != k)[0]) for d, a in zip(data, assignment)]
        valid = [d.take(np.nonzero(a == k)[0]) for d, a in zip(data, assignment)]
        for i, lam in enumerate(grid):
            res = fit_method(train, replace(base, lam=float(lam)), method)
            scores[i, k] = validation_score(predict(res, valid), valid)
    best = int(np.argmin(scores.mean(axis=1)))
    name = "KM-weighted MAE on events" if config.outcome == SURVIVAL else "MAE"
    curve = CVCurve(lambdas=grid, scores=scores, best_index=best, score_name=name,
                    meta={"folds": spec.folds, "seed": spec.seed, "c": spec.c})
    return curve.best_lambda, curve


def write_cv_csv(path, curve: CVCurve, header: str | None = None):
    """Per-fold scores: columns ``lambda, fold, score``."""
    with open(path, "w", newline="") as fh:
        if header:
            fh.write(header.rstrip("\n") + "\n")
        w = csv.writer(fh)
        w.writerow(["lambda", "fold", "score"])
        for i, lam in enumerate(curve.lambdas):
            for k in range(curve.scores.shape[1]):
                w.writerow([repr(float(lam)), k + 1, repr(float(curve.scores[i, k]))])


def write_cv_curve_csv(path, curve: CVCurve, header: str | None = None):
    """Fold-averaged scores: columns ``lambda, mean_score``."""
    with open(path, "w", newline="") as fh:
        if header:
            fh.write(header.rstrip("\n") + "\n")
        w = csv.writer(fh)
        w.writerow(["lambda", "mean_score"])
        for lam, s in zip(curve.lambdas, curve.mean_scores):
            w.writerow([repr(float(lam)), repr(float(s))])
