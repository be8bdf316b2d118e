"""Comparison methods built on the same boosting engine.

Six methods are available:

=========  ===============  ==========  ==============
key        loss             basis       integration
=========  ===============  ==========  ==============
rnp_int    Cauchy           spline      joint
nrnp_int   least squares    spline      joint
rp_int     Cauchy           linear      joint
nrp_int    least squares    linear      joint
rnp_meta   Cauchy           spline      per dataset
rnp_pool   Cauchy           spline      pooled
=========  ===============  ==========  ==============

Meta fits run the engine once per dataset (no commonality penalty), pooled
fits run it once on the stacked rows. Both are reported in the joint
``(M, p, K)`` layout so the metrics treat every method alike.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .basis import BasisConfig, BasisExpansion, build_expansion, expand
from .core import FitConfig, FitResult, check_datasets, fit_expansion
from .data import Dataset
from .loss import CAUCHY, LEAST_SQUARES, LossSpec
from .state import CoefficientState

JOINT, META, POOLED = "joint", "per_dataset", "pooled"


@dataclass(frozen=True)
class MethodSpec:
    method: str
    label: str
    loss_kind: str
    parametric: bool
    integration: str


METHODS = {
    "rnp_int": MethodSpec("rnp_int", "RNP-Int", CAUCHY, False, JOINT),
    "nrnp_int": MethodSpec("nrnp_int", "NRNP-Int", LEAST_SQUARES, False, JOINT),
    "rp_int": MethodSpec("rp_int", "RP-Int", CAUCHY, True, JOINT),
    "nrp_int": MethodSpec("nrp_int", "NRP-Int", LEAST_SQUARES, True, JOINT),
    "rnp_meta": MethodSpec("rnp_meta", "RNP-Meta", CAUCHY, False, META),
    "rnp_pool": MethodSpec("rnp_pool", "RNP-Pool", CAUCHY, False, POOLED),
}


def method_spec(method) -> MethodSpec:
    if isinstance(method, MethodSpec):
        return method
    key = str(method).strip().lower().replace("-", "_")
    if key not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    return METHODS[key]


def make_method(method, config: FitConfig = FitConfig()) -> FitConfig:
    """Adjust ``config`` to the loss, basis and penalty of ``method``.

    The Cauchy scale ``c`` is kept. Meta and pooled fits have no
    commonality penalty, so their ``lam`` is set to 0.
    """
    spec = method_spec(method)
    basis = BasisConfig.parametric() if spec.parametric else config.basis
    if not spec.parametric and config.basis.parametric_mode:
        basis = BasisConfig()
    lam = config.lam if spec.integration == JOINT else 0.0
    return replace(config, loss=LossSpec(spec.loss_kind, config.loss.c), basis=basis, lam=lam)


# ---------------------------------------------------------------------------
# per-dataset fits


def _single_view(basis: BasisExpansion, m: int) -> BasisExpansion:
    return BasisExpansion(config=basis.config, knots=basis.knots,
                          column_means=basis.column_means[m:m + 1].copy(), blocks=[basis.blocks[m]])


def fit_meta(data, config: FitConfig = FitConfig()) -> list:
    """One sparse boosting fit per dataset, each with its own stopping point.

    Knots come from the pooled covariate ranges as in the joint fit, so the
    estimated functions are directly comparable across methods.
    """
    data = check_datasets(data, config)
    cfg = replace(config, lam=0.0)
    basis = build_expansion([d.X for d in data], cfg.basis)
    return [fit_expansion(_single_view(basis, m), [d], cfg, method="RNP-Meta")
            for m, d in enumerate(data)]


def combine_meta(results: list) -> FitResult:
    """Stack per-dataset fits into the joint layout.

    Every nonzero effect gets a label of its own, so no two datasets ever
    share an estimated effect.
    """
    M = len(results)
    p, K = results[0].state.p, results[0].state.K
    state = CoefficientState.zeros(M, p, K)
    for m, res in enumerate(results):
        state.beta[m] = res.state.beta[0]
        state.updated[m] = res.state.updated[0]
        state.group_labels[:, m] = np.where(res.state.updated[0], m + 1, 0)
    first = results[0].basis
    basis = BasisExpansion(config=first.config, knots=first.knots,
                           column_means=np.concatenate([r.basis.column_means for r in results]),
                           blocks=[r.basis.blocks[0] for r in results])
    return FitResult(state=state, t_star=max(r.t_star for r in results), trace=[],
                     fitted_values=[r.fitted_values[0] for r in results], basis=basis,
                     config=results[0].config, covariate_names=results[0].covariate_names,
                     method="RNP-Meta", parts=list(results))


# ---------------------------------------------------------------------------
# pooled fit


def _stack(data) -> tuple:
    """Stacked dataset plus, for each input row, its position in the stack."""
    y = np.concatenate([d.y for d in data])
    X = np.vstack([d.X for d in data])
    delta = None if data[0].delta is None else np.concatenate([d.delta for d in data])
    order = np.argsort(y, kind="stable") if delta is not None else np.arange(y.size)
    pos = np.empty(y.size, dtype=np.int64)
    pos[order] = np.arange(y.size)
    pooled = Dataset(y=y[order], X=X[order], delta=None if delta is None else delta[order],
                     id="pooled", covariate_names=list(data[0].covariate_names))
    return pooled, pos


def fit_pool(data, config: FitConfig = FitConfig()) -> FitResult:
    """One model on all rows stacked together, reported as M identical copies.

    Survival rows are re-sorted by time after stacking so the Kaplan-Meier
    weights refer to the pooled sample.
    """
    data = check_datasets(data, config)
    cfg = replace(config, lam=0.0)
    pooled, pos = _stack(data)
    basis1 = build_expansion([pooled.X], cfg.basis)
    single = fit_expansion(basis1, [pooled], cfg, method="RNP-Pool")

    M = len(data)
    p, K = basis1.p, basis1.K
    state = CoefficientState.zeros(M, p, K)
    state.beta[:] = single.state.beta[0]
    state.updated[:] = single.state.updated[0]
    means = np.repeat(basis1.column_means, M, axis=0)
    blocks = []
    for d in data:
        blk = np.empty((p, d.n, K))
        for j in range(p):
            blk[j] = expand(d.X[:, j], basis1.knots[j], cfg.basis) - basis1.column_means[0, j]
        blocks.append(blk)
    basis = BasisExpansion(config=cfg.basis, knots=basis1.knots, column_means=means, blocks=blocks)
    fitted, start = [], 0
    for d in data:
        fitted.append(single.fitted_values[0][pos[start:start + d.n]])
        start += d.n
    return FitResult(state=state, t_star=single.t_star, trace=single.trace, fitted_values=fitted,
                     basis=basis, config=cfg, covariate_names=single.covariate_names,
                     method="RNP-Pool", parts=[single])


# ---------------------------------------------------------------------------


def fit_method(data, config: FitConfig = FitConfig(), method="rnp_int") -> FitResult:
    """Fit any of the six methods and return a joint-layout result."""
    spec = method_spec(method)
    cfg = make_method(spec, config)
    if spec.integration == META:
        return combine_meta(fit_meta(data, cfg))
    if spec.integration == POOLED:
        return fit_pool(data, cfg)
    data = check_datasets(data, cfg)
    basis = build_expansion([d.X for d in data], cfg.basis)
    return fit_expansion(basis, data, cfg, method=spec.label)
