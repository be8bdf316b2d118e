"""The per-cohort container shared by every module."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np


@dataclass
class Dataset:
    """One cohort: response, optional event indicators, covariates.

    For survival data ``y`` is the observed log-time ``log(min(T, C))`` and
    ``delta`` is 1 for an observed event.
    """

    y: np.ndarray
    X: np.ndarray
    delta: np.ndarray | None = None
    id: str = ""
    covariate_names: list = field(default=None)

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=float).ravel()
        self.X = np.asarray(self.X, dtype=float)
        if self.X.ndim != 2:
            raise ValueError("X must be a 2-d matrix")
        if self.X.shape[0] != self.y.size:
            raise ValueError(f"{self.y.size} responses but {self.X.shape[0]} covariate rows")
        if self.y.size == 0:
            raise ValueError("empty dataset")
        if self.delta is not None:
            self.delta = np.asarray(self.delta).ravel().astype(np.int64)
            if self.delta.size != self.y.size:
                raise ValueError("delta length differs from y")
            if not np.all(np.isin(self.delta, (0, 1))):
                raise ValueError("delta must contain only 0 and 1")
        if self.covariate_names is None:
            self.covariate_names = [f"x{j + 1}" for j in range(self.X.shape[1])]
        elif len(self.covariate_names) != self.X.shape[1]:
            raise ValueError("covariate_names length differs from the number of columns")

    @property
    def n(self) -> int:
        return self.y.size

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def is_survival(self) -> bool:
        return self.delta is not None

    def take(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return replace(
            self,
            y=self.y[idx],
            X=self.X[idx],
            delta=None if self.delta is None else self.delta[idx],
            covariate_names=list(self.covariate_names),
        )

    def sorted_by_time(self) -> "Dataset":
        """Stable ascending sort on ``y`` (needed for Kaplan-Meier weights)."""
        return self.take(np.argsort(self.y, kind="stable"))

    def with_columns(self, cols) -> "Dataset":
        cols = list(cols)
        return replace(
            self,
            X=self.X[:, cols],
            covariate_names=[self.covariate_names[c] for c in cols],
        )
