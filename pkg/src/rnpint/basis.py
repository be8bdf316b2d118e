"""Centered cubic B-spline expansions shared across datasets.

Knots for covariate ``j`` are placed on the range of ``x_j`` pooled over all
datasets, so every dataset uses the same spline functions; centering is then
done per dataset so each design column sums to zero within that dataset.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class BasisConfig:
    """Shape of the per-covariate expansion.

    ``K`` is the number of design columns. The spline basis is built without
    an intercept (the first B-spline is dropped), so a cubic expansion with
    ``n_inner_knots`` interior knots has ``n_inner_knots + degree`` columns.
    Give either field and the other is derived; with neither, ``K = 6``.
    In ``parametric_mode`` the expansion is the raw covariate (``K = 1``).
    """

    degree: int = 3
    K: int | None = None
    n_inner_knots: int | None = None
    parametric_mode: bool = False

    def __post_init__(self):
        if self.parametric_mode:
            object.__setattr__(self, "K", 1)
            if self.n_inner_knots is None:
                object.__setattr__(self, "n_inner_knots", 0)
            return
        if self.degree != 3:
            raise ValueError("spline mode requires a cubic basis (degree=3)")
        if self.K is None:
            n_inner = 3 if self.n_inner_knots is None else self.n_inner_knots
            object.__setattr__(self, "K", n_inner + self.degree)
        if self.n_inner_knots is None:
            object.__setattr__(self, "n_inner_knots", self.K - self.degree)
        if self.n_inner_knots < 0:
            raise ValueError("n_inner_knots must be >= 0")
        if self.K != self.n_inner_knots + self.degree:
            raise ValueError(
                f"K={self.K} inconsistent with {self.n_inner_knots} inner knots "
                f"(expected K = n_inner_knots + {self.degree})"
            )
        if self.K < 1:
            raise ValueError("K must be >= 1")

    @classmethod
    def parametric(cls) -> "BasisConfig":
        return cls(parametric_mode=True)


def build_knots(x_pooled, config: BasisConfig) -> np.ndarray:
    """Clamped knot vector on the pooled range of one covariate.

    Interior knots are equally spaced strictly inside ``[min, max]``; the
    boundary knots are repeated ``degree + 1`` times.
    """
    x = np.asarray(x_pooled, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("empty covariate")
    if not np.all(np.isfinite(x)):
        raise ValueError("covariate contains non-finite values")
    lo, hi = float(x.min()), float(x.max())
    if not hi > lo:
        raise ValueError("degenerate covariate: max equals min")
    inner = np.linspace(lo, hi, config.n_inner_knots + 2)[1:-1]
    d = config.degree
    return np.concatenate([np.full(d + 1, lo), inner, np.full(d + 1, hi)])


def bspline_basis(x, knots, degree: int = 3) -> np.ndarray:
    """Full B-spline basis by the Cox-de Boor recursion.

    Returns an ``n x (len(knots) - degree - 1)`` matrix. Points at the right
    boundary are assigned to the last nonempty knot interval, so rows sum to
    one on the whole closed range.
    """
    x = np.asarray(x, dtype=float).ravel()
    t = np.asarray(knots, dtype=float)
    n_basis = t.size - degree - 1
    # degree-0 indicators on each knot interval
    B = ((t[:-1][None, :] <= x[:, None]) & (x[:, None] < t[1:][None, :])).astype(float)
    last = np.nonzero(t[:-1] < t[1:])[0][-1]
    B[x == t[-1], last] = 1.0
    for d in range(1, degree + 1):
        nb = t.size - d - 1
        left_den = t[d:d + nb] - t[:nb]
        right_den = t[d + 1:d + 1 + nb] - t[1:1 + nb]
        with np.errstate(divide="ignore", invalid="ignore"):
            left = np.where(left_den > 0, (x[:, None] - t[:nb]) / left_den, 0.0)
            right = np.where(right_den > 0, (t[d + 1:d + 1 + nb] - x[:, None]) / right_den, 0.0)
        B = left * B[:, :nb] + right * B[:, 1:nb + 1]
    return B[:, :n_basis]


def expand(x, knots, config: BasisConfig) -> np.ndarray:
    """Uncentered ``n x K`` expansion of one covariate.

    Values outside the boundary knots are clamped to them.
    """
    x = np.asarray(x, dtype=float).ravel()
    if config.parametric_mode:
        return x[:, None].copy()
    knots = np.asarray(knots, dtype=float)
    xc = np.clip(x, knots[0], knots[-1])
    return bspline_basis(xc, knots, config.degree)[:, 1:]


def center(block):
    """Subtract column means. Returns ``(centered, means)``."""
    block = np.asarray(block, dtype=float)
    if block.ndim == 1:
        block = block[:, None]
    if block.shape[0] < 2:
        raise ValueError("centering needs at least 2 rows")
    means = block.mean(axis=0)
    return block - means, means


@dataclass
class BasisExpansion:
    """Centered design blocks for M datasets and p covariates.

    Attributes
    ----------
    knots : list of ndarray
        One knot vector per covariate, shared by all datasets.
    column_means : ndarray, shape (M, p, K)
        Means removed during centering, reused when expanding new data.
    blocks : list of ndarray
        ``blocks[m]`` has shape ``(p, n_m, K)``; ``blocks[m][j]`` is the
        centered design block for covariate ``j`` in dataset ``m``.
    """

    config: BasisConfig
    knots: list
    column_means: np.ndarray
    blocks: list = field(repr=False)

    @property
    def M(self) -> int:
        return self.column_means.shape[0]

    @property
    def p(self) -> int:
        return len(self.knots)

    @property
    def K(self) -> int:
        return self.config.K

    def transform(self, X, m: int) -> np.ndarray:
        """Expand new rows for dataset ``m`` with the training knots and means."""
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.p:
            raise ValueError(f"expected an n x {self.p} matrix, got shape {X.shape}")
        out = np.empty((self.p, X.shape[0], self.K))
        for j in range(self.p):
            out[j] = expand(X[:, j], self.knots[j], self.config) - self.column_means[m, j]
        return out


def build_expansion(X_list, config: BasisConfig | None = None) -> BasisExpansion:
    """Pooled knots, per-dataset centering."""
    config = config or BasisConfig()
    X_list = [np.asarray(X, dtype=float) for X in X_list]
    p = X_list[0].shape[1]
    if any(X.ndim != 2 or X.shape[1] != p for X in X_list):
        raise ValueError("all datasets must share the same p covariates")
    M, K = len(X_list), config.K
    pooled = np.vstack(X_list)
    knots = [build_knots(pooled[:, j], config) for j in range(p)]
    means = np.empty((M, p, K))
    blocks = []
    for m, X in enumerate(X_list):
        blk = np.empty((p, X.shape[0], K))
        for j in range(p):
            blk[j], means[m, j] = center(expand(X[:, j], knots[j], config))
        blocks.append(blk)
    return BasisExpansion(config=config, knots=knots, column_means=means, blocks=blocks)
