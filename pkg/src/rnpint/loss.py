"""Cauchy and least-squares losses, and Kaplan-Meier weights for censored data."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

CAUCHY = "cauchy"
LEAST_SQUARES = "least_squares"


@dataclass(frozen=True)
class LossSpec:
    kind: str = CAUCHY
    c: float = 1.0

    def __post_init__(self):
        if self.kind not in (CAUCHY, LEAST_SQUARES):
            raise ValueError(f"unknown loss kind {self.kind!r}")
        if not self.c > 0:
            raise ValueError("Cauchy scale c must be positive")


def rho(r, spec: LossSpec = LossSpec()):
    """Pointwise loss: ``log(1 + (r/c)^2)`` or ``r^2``."""
    r = np.asarray(r, dtype=float)
    if spec.kind == LEAST_SQUARES:
        return r * r
    return np.log1p((r / spec.c) ** 2)


def psi(r, spec: LossSpec = LossSpec()):
    """Derivative of :func:`rho` (the influence function)."""
    r = np.asarray(r, dtype=float)
    if spec.kind == LEAST_SQUARES:
        return 2.0 * r
    return 2.0 * r / (r * r + spec.c ** 2)


def irls_weights(r, spec: LossSpec = LossSpec()):
    """``psi(r) / r``, the reweighting used by the IRLS solver."""
    r = np.asarray(r, dtype=float)
    if spec.kind == LEAST_SQUARES:
        return np.full_like(r, 2.0)
    return 2.0 / (r * r + spec.c ** 2)


def km_weights(y, delta) -> np.ndarray:
    """Kaplan-Meier weights for responses sorted in ascending order.

    ``w_1 = d_1 / n`` and
    ``w_i = d_i / (n - i + 1) * prod_{k<i} ((n - k) / (n - k + 1)) ** d_k``.

    Sorting is left to the caller so that the weights stay aligned with the
    rows of the design matrix; unsorted input raises ``ValueError``.
    """
    y = np.asarray(y, dtype=float).ravel()
    delta = np.asarray(delta).ravel()
    n = y.size
    if n < 1:
        raise ValueError("need at least one observation")
    if delta.size != n:
        raise ValueError("y and delta lengths differ")
    if not np.all(np.isin(delta, (0, 1))):
        raise ValueError("delta must be 0/1")
    if np.any(np.diff(y) < 0):
        raise ValueError("survival records must be sorted by y ascending")
    d = delta.astype(float)
    i = np.arange(1, n + 1)
    k = i[:-1]
    # running product in log space; every factor is finite for k < n
    log_prod = np.concatenate([[0.0], np.cumsum(d[:-1] * np.log((n - k) / (n - k + 1.0)))])
    return d / (n - i + 1.0) * np.exp(log_prod)


def sort_by_time(y, delta, *arrays):
    """Stable sort of survival records (ties keep input order)."""
    order = np.argsort(np.asarray(y), kind="stable")
    out = [np.asarray(y)[order], np.asarray(delta)[order]]
    out += [np.asarray(a)[order] for a in arrays]
    return tuple(out)


def dataset_loss(residuals, weights=None, spec: LossSpec = LossSpec()) -> float:
    """``sum_i w_i rho(r_i)``; unit weights when ``weights`` is None."""
    r = np.asarray(residuals, dtype=float).ravel()
    if weights is None:
        return float(np.sum(rho(r, spec)))
    w = np.asarray(weights, dtype=float).ravel()
    if w.size != r.size:
        raise ValueError(f"{r.size} residuals but {w.size} weights")
    return float(np.dot(w, rho(r, spec)))


def loss_gradient(residuals, design_block, weights=None, spec: LossSpec = LossSpec()):
    """Gradient of ``dataset_loss(r - B @ g)`` with respect to ``g`` at ``g = 0``."""
    r = np.asarray(residuals, dtype=float).ravel()
    B = np.asarray(design_block, dtype=float)
    if B.ndim == 1:
        B = B[:, None]
    if B.shape[0] != r.size:
        raise ValueError(f"design block has {B.shape[0]} rows for {r.size} residuals")
    g = psi(r, spec)
    if weights is not None:
        w = np.asarray(weights, dtype=float).ravel()
        if w.size != r.size:
            raise ValueError(f"{r.size} residuals but {w.size} weights")
        g = w * g
    return -(B.T @ g)
