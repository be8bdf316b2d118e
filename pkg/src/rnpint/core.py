"""Integrative sparse boosting across datasets (RNP-Int).

Each iteration scans every covariate ``j`` and every nonempty subset ``G`` of
a current group of datasets for ``j``. For each candidate the common increment
``gamma_G`` minimizing the (weighted) loss of the datasets in ``G`` is found,
and the candidate is scored by

    F = sum_m loss_m + sum_m log(n_m)/n_m * |support_m| + lam * pen_c

evaluated at the coefficients after adding the full ``gamma_G``. The best
candidate is applied with step ``v``. The returned estimate is the iterate
minimizing the stopping score ``S(t)``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
import numpy as np

from .basis import BasisConfig, BasisExpansion, build_expansion
from .data import Dataset
from .loss import LEAST_SQUARES, LossSpec, dataset_loss, km_weights, rho
from .state import (
    CoefficientState,
    IncrementProposal,
    apply_increment_inplace,
    equal_pairs_per_covariate,
    mask_to_subset,
    pen_c_from_count,
)
from . import state as state_mod

CONTINUOUS = "continuous"
SURVIVAL = "survival_aft"

JITTER = 1e-8


@dataclass(frozen=True)
class FitConfig:
    """Hyperparameters of one boosting fit.

    ``loss_scale='mean'`` gives every observation of a continuous response
    weight ``1/n_m``, which puts the loss on the same footing as the
    Kaplan-Meier weighted survival loss and as the ``log(n)/n`` complexity
    term. ``'sum'`` uses unit weights.

    ``pen_in_sum=True`` counts ``lam * pen_c`` once per dataset in the
    stopping score; ``False`` counts it once.
    """

    loss: LossSpec = LossSpec()
    lam: float = 0.0
    v: float = 0.1
    T: int = 300
    basis: BasisConfig = BasisConfig()
    outcome: str = CONTINUOUS
    loss_scale: str = "mean"
    pen_in_sum: bool = True
    irls_max_sweeps: int = 50
    irls_tol: float = 1e-6

    def __post_init__(self):
        if not 0 < self.v <= 1:
            raise ValueError("step size v must be in (0, 1]")
        if self.T < 1:
            raise ValueError("T must be >= 1")
        if self.lam < 0:
            raise ValueError("lambda must be >= 0")
        if self.outcome not in (CONTINUOUS, SURVIVAL):
            raise ValueError(f"unknown outcome {self.outcome!r}")
        if self.loss_scale not in ("mean", "sum"):
            raise ValueError(f"unknown loss_scale {self.loss_scale!r}")


@dataclass
class TraceRow:
    t: int
    S: float
    j: int
    mask: int
    F: float
    gamma: np.ndarray = field(repr=False)
    loss: float = 0.0
    bic: float = 0.0
    pen: float = 0.0

    @property
    def subset(self) -> tuple:
        return mask_to_subset(self.mask)


@dataclass
class FitResult:
    """Outcome of :func:`fit`.

    ``state`` is the coefficient state after ``t_star`` updates, the iterate
    with the smallest stopping score (first one on ties).
    """

    state: CoefficientState
    t_star: int
    trace: list
    fitted_values: list
    basis: BasisExpansion
    config: FitConfig
    covariate_names: list = None
    method: str = "RNP-Int"
    parts: list = None  # per-dataset fits behind a combined meta result

    @property
    def S(self) -> np.ndarray:
        return np.array([row.S for row in self.trace])

    @property
    def beta(self) -> np.ndarray:
        return self.state.beta

    def support(self) -> np.ndarray:
        return self.state.updated.copy()

    def component(self, m: int, j: int, x) -> np.ndarray:
        """Estimated centered component ``f_j^m`` evaluated at new points ``x``."""
        from .basis import expand

        B = expand(x, self.basis.knots[j], self.basis.config) - self.basis.column_means[m, j]
        return B @ self.state.beta[m, j]


# ---------------------------------------------------------------------------
# increment solver


def _solve_spd(A, b):
    """Batched solve of ``A x = b`` with a small relative ridge on the diagonal."""
    K = A.shape[-1]
    scale = np.trace(A, axis1=-2, axis2=-1) / K
    ridge = JITTER * np.where(scale > 0, scale, 1.0)
    A = A + ridge[..., None, None] * np.eye(K)
    return np.linalg.solve(A, b[..., None])[..., 0]


def _wloss(e, w, spec):
    return (rho(e, spec) * w).sum(axis=-1)


NEWTON_RCOND = 1e-2


def solve_increment_batch(Phi, r, w, spec: LossSpec, max_sweeps=50, tol=1e-6, history=False):
    """Common increment for a batch of candidate covariates.

    Parameters
    ----------
    Phi : ndarray, shape (q, N, K)
        Stacked design blocks, one per candidate covariate, rows covering the
        datasets of the subset.
    r, w : ndarray, shape (N,)
        Current residuals and observation weights.

    Returns
    -------
    gamma : (q, K) increments
    obj : (q,) weighted loss at ``r - Phi @ gamma``
    hist : list of (q,) objective arrays per sweep, only if ``history``
    """
    Phi = np.asarray(Phi, dtype=float)
    q, N, K = Phi.shape
    r = np.asarray(r, dtype=float)
    w = np.asarray(w, dtype=float)
    if spec.kind == LEAST_SQUARES:
        PW = Phi * w[None, :, None]
        A = np.matmul(PW.transpose(0, 2, 1), Phi)
        gamma = _solve_spd(A, PW.transpose(0, 2, 1) @ r)
        e = r[None, :] - np.matmul(Phi, gamma[:, :, None])[:, :, 0]
        obj = _wloss(e, w, spec)
        hist = [np.full(q, _wloss(r, w, spec)), obj.copy()]
        return (gamma, obj, hist) if history else (gamma, obj)

    c2 = spec.c ** 2
    gamma = np.zeros((q, K))
    fit = np.zeros((q, N))
    obj = np.full(q, _wloss(r, w, spec))
    hist = [obj.copy()]
    active = np.arange(q)
    for _ in range(max_sweeps):
        if active.size == 0:
            break
        P = Phi if active.size == q else Phi[active]
        Pt = P.transpose(0, 2, 1)
        e = r[None, :] - fit[active]
        denom = e * e + c2
        # IRLS and Newton share the right-hand side sum_i w_i psi(e_i) phi_i
        b = (Pt @ (w[None, :] * (2.0 * e / denom))[:, :, None])[:, :, 0]
        curv = w[None, :] * (2.0 * (c2 - e * e) / (denom * denom))
        A = np.matmul(Pt * curv[:, None, :], P)
        tr = np.trace(A, axis1=1, axis2=2) / K
        # Newton only on well conditioned Hessians; a weak direction carried by
        # a few outlying rows sends Newton to a far stationary point
        newton = np.linalg.eigvalsh(A)[:, 0] > NEWTON_RCOND * np.abs(tr)
        if not newton.all():
            irls = ~newton
            Wt = w[None, :] * (2.0 / denom[irls])
            A[irls] = np.matmul(Pt[irls] * Wt[:, None, :], P[irls])
        step = _solve_spd(A, b)
        dfit = np.matmul(P, step[:, :, None])[:, :, 0]
        old = obj[active]
        scale = np.ones(active.size)
        new = _wloss(e - dfit, w, spec)
        bad = new > old
        for _ in range(30):
            if not bad.any():
                break
            scale[bad] *= 0.5
            new[bad] = _wloss(e[bad] - scale[bad, None] * dfit[bad], w, spec)
            bad = new > old
        # rows that still cannot descend keep their current increment
        keep = ~bad
        idx = active[keep]
        gamma[idx] += scale[keep, None] * step[keep]
        fit[idx] += scale[keep, None] * dfit[keep]
        obj[idx] = new[keep]
        moved = np.max(np.abs(scale[:, None] * step), axis=1)
        done = bad | (moved < tol)
        if history:
            hist.append(obj.copy())
        active = active[~done]
    return (gamma, obj, hist) if history else (gamma, obj)


def solve_increment(blocks, residuals, weights=None, spec: LossSpec = LossSpec(),
                    max_sweeps=50, tol=1e-6):
    """Optimal common increment of one covariate over a subset of datasets.

    ``blocks``, ``residuals`` and ``weights`` are sequences with one entry per
    dataset in the subset (a single array is taken as a one-dataset subset).
    """
    if isinstance(blocks, np.ndarray):
        blocks, residuals = [blocks], [residuals]
        weights = None if weights is None else [weights]
    Phi = np.vstack([np.asarray(b, dtype=float).reshape(len(r), -1) for b, r in zip(blocks, residuals)])
    r = np.concatenate([np.asarray(x, dtype=float).ravel() for x in residuals])
    w = np.ones_like(r) if weights is None else np.concatenate([np.asarray(x, float).ravel() for x in weights])
    gamma, _ = solve_increment_batch(Phi[None], r, w, spec, max_sweeps, tol)
    return gamma[0]


# ---------------------------------------------------------------------------
# objective pieces


def bic_term(state: CoefficientState, m: int, n_m: int) -> float:
    return float(np.log(n_m) / n_m * np.count_nonzero(state.updated[m]))


def pen_c(state: CoefficientState) -> float:
    return state_mod.pen_c(state)


def observation_weights(data, config: FitConfig) -> list:
    out = []
    for d in data:
        if config.outcome == SURVIVAL:
            if d.delta is None:
                raise ValueError("survival outcome needs event indicators")
            out.append(km_weights(d.y, d.delta))
        elif config.loss_scale == "mean":
            out.append(np.full(d.n, 1.0 / d.n))
        else:
            out.append(np.ones(d.n))
    return out


class BoostContext:
    """Design blocks, responses and running residuals for one boosting run.

    The stateful pieces are ``state`` and ``residuals``; :meth:`step` advances
    both by one iteration.
    """

    def __init__(self, blocks, ys, weights, config: FitConfig):
        self.blocks = [np.ascontiguousarray(b, dtype=float) for b in blocks]
        self.ys = [np.asarray(y, dtype=float) for y in ys]
        self.weights = [np.asarray(w, dtype=float) for w in weights]
        self.config = config
        self.M = len(self.blocks)
        self.p, _, self.K = self.blocks[0].shape
        self.n = np.array([y.size for y in self.ys])
        self.log_n_over_n = np.log(self.n) / self.n
        self.state = CoefficientState.zeros(self.M, self.p, self.K)
        self.residuals = [y.copy() for y in self.ys]
        self.t = 0
        self.masks = list(range(1, 1 << self.M))
        self._cat = {}
        for mask in self.masks:
            members = mask_to_subset(mask)
            if len(members) == 1:
                Phi = self.blocks[members[0]]
            else:
                Phi = np.concatenate([self.blocks[m] for m in members], axis=1)
            w = np.concatenate([self.weights[m] for m in members])
            self._cat[mask] = (members, Phi, w)

    # -- bookkeeping -------------------------------------------------------

    def dataset_losses(self, residuals=None):
        residuals = self.residuals if residuals is None else residuals
        return np.array([dataset_loss(r, w, self.config.loss) for r, w in zip(residuals, self.weights)])

    def recomputed_residuals(self, state=None):
        state = self.state if state is None else state
        return [y - np.einsum("jnk,jk->n", B, state.beta[m])
                for m, (y, B) in enumerate(zip(self.ys, self.blocks))]

    def pen_factor(self) -> float:
        return float(self.M) if self.config.pen_in_sum else 1.0

    def score_parts(self, state=None, residuals=None):
        """``(loss, bic, pen_c)`` of a state; loss and bic summed over datasets."""
        state = self.state if state is None else state
        if residuals is None:
            residuals = self.residuals if state is self.state else self.recomputed_residuals(state)
        loss = float(self.dataset_losses(residuals).sum())
        bic = float(np.dot(self.log_n_over_n, state.updated.sum(axis=1)))
        return loss, bic, state_mod.pen_c(state)

    def stopping_score(self, state=None, residuals=None) -> float:
        loss, bic, pen = self.score_parts(state, residuals)
        return loss + bic + self.pen_factor() * self.config.lam * pen

    def objective_F(self, j: int, subset, gamma, decompose=False):
        """Reference evaluation of F for one candidate from scratch."""
        hyp = self.state.copy()
        apply_increment_inplace(hyp, j, subset, gamma, 1.0)
        loss, bic, pen = self.score_parts(hyp, self.recomputed_residuals(hyp))
        F = loss + bic + self.config.lam * pen
        return (F, loss, bic, pen) if decompose else F

    # -- candidate search --------------------------------------------------

    def candidates(self):
        """Solve and score every valid (covariate, subset) candidate.

        Returns ``F`` of shape ``(p, 2**M - 1)`` (``inf`` where the subset
        crosses groups), the increments ``(2**M - 1, p, K)`` and the three
        parts of ``F``.
        """
        cfg = self.config
        st = self.state
        labels = st.group_labels
        n_masks = len(self.masks)
        F = np.full((self.p, n_masks), np.inf)
        parts = np.zeros((3, self.p, n_masks))
        gammas = np.zeros((n_masks, self.p, self.K))
        L = self.dataset_losses()
        L_total = L.sum()
        bic_cur = float(np.dot(self.log_n_over_n, st.updated.sum(axis=1)))
        eq_total = int(equal_pairs_per_covariate(labels).sum())
        for col, mask in enumerate(self.masks):
            members, Phi, w = self._cat[mask]
            lab = labels[:, members]
            valid = np.all(lab == lab[:, :1], axis=1)
            js = np.nonzero(valid)[0]
            if js.size == 0:
                continue
            r = np.concatenate([self.residuals[m] for m in members])
            P = Phi if js.size == self.p else Phi[js]
            gam, obj = solve_increment_batch(P, r, w, cfg.loss, cfg.irls_max_sweeps, cfg.irls_tol)
            nonzero = np.any(gam != 0, axis=1)
            loss = L_total - L[list(members)].sum() + obj
            fresh = ~st.updated[np.ix_(members, js)]
            bic = bic_cur + (self.log_n_over_n[list(members)] @ fresh) * nonzero
            group_size = (labels[js] == lab[js, :1]).sum(axis=1)
            k = len(members)
            broken = np.where(nonzero & (k < group_size), k * (group_size - k), 0)
            pen = np.array([pen_c_from_count(eq_total - b, self.M, self.p) for b in broken]) \
                if self.M > 1 else np.zeros(js.size)
            F[js, col] = loss + bic + cfg.lam * pen
            parts[0, js, col], parts[1, js, col], parts[2, js, col] = loss, bic, pen
            gammas[col, js] = gam
        return F, gammas, parts

    def best_candidate(self):
        F, gammas, parts = self.candidates()
        # row-major argmin: smallest covariate, then smallest bitmask
        flat = int(np.argmin(F))
        j, col = divmod(flat, F.shape[1])
        mask = self.masks[col]
        prop = IncrementProposal(j=j, subset=mask_to_subset(mask), gamma=gammas[col, j].copy(),
                                 objective_value=float(F[j, col]))
        return prop, parts[:, j, col]

    def step(self) -> TraceRow:
        prop, _ = self.best_candidate()
        v = self.config.v
        apply_increment_inplace(self.state, prop.j, prop.subset, prop.gamma, v)
        for m in prop.subset:
            self.residuals[m] = self.residuals[m] - v * (self.blocks[m][prop.j] @ prop.gamma)
        self.t += 1
        loss, bic, pen = self.score_parts()
        S = loss + bic + self.pen_factor() * self.config.lam * pen
        return TraceRow(t=self.t, S=S, j=prop.j, mask=prop.bitmask, F=prop.objective_value,
                        gamma=prop.gamma, loss=loss, bic=bic, pen=pen)

    def run(self, T: int):
        """Boost ``T`` times; return the trace and the state with minimal S."""
        trace = []
        best_S, best_state = np.inf, None
        for _ in range(T):
            row = self.step()
            trace.append(row)
            if row.S < best_S:
                best_S, best_state = row.S, self.state.copy()
        return trace, best_state


def boost_step(context: BoostContext):
    """One iteration: returns the applied proposal and the new state."""
    row = context.step()
    prop = IncrementProposal(j=row.j, subset=row.subset, gamma=row.gamma, objective_value=row.F)
    return prop, context.state.copy()


def stopping_score(context: BoostContext, state=None) -> float:
    return context.stopping_score(state)


# ---------------------------------------------------------------------------
# fitting


def check_datasets(data, config: FitConfig):
    data = list(data)
    if not data:
        raise ValueError("no datasets given")
    p = data[0].p
    for d in data:
        if d.n == 0:
            raise ValueError(f"dataset {d.id!r} is empty")
        if d.p != p:
            raise ValueError(f"dataset {d.id!r} has {d.p} covariates, expected {p}")
        if config.outcome == SURVIVAL:
            if d.delta is None:
                raise ValueError(f"dataset {d.id!r} lacks event indicators")
            if np.any(np.diff(d.y) < 0):
                raise ValueError(f"dataset {d.id!r} is not sorted by survival time")
    return data


def fit_expansion(basis: BasisExpansion, data, config: FitConfig, method="RNP-Int") -> FitResult:
    """Boost on an already-built expansion (shared by the baselines)."""
    ctx = BoostContext(basis.blocks, [d.y for d in data], observation_weights(data, config), config)
    trace, best = ctx.run(config.T)
    S = np.array([row.S for row in trace])
    t_star = int(np.argmin(S)) + 1
    fitted = [np.einsum("jnk,jk->n", B, best.beta[m]) for m, B in enumerate(basis.blocks)]
    return FitResult(state=best, t_star=t_star, trace=trace, fitted_values=fitted, basis=basis,
                     config=config, covariate_names=list(data[0].covariate_names), method=method)


def fit(data, config: FitConfig = FitConfig()) -> FitResult:
    """Integrative sparse boosting over a list of :class:`Dataset`."""
    data = check_datasets(data, config)
    basis = build_expansion([d.X for d in data], config.basis)
    return fit_expansion(basis, data, config)


def predict(result: FitResult, new_data, basis: BasisExpansion | None = None) -> list:
    """Per-dataset predictions (log-time scale for survival fits)."""
    basis = result.basis if basis is None else basis
    new_data = list(new_data)
    if len(new_data) != result.state.M:
        raise ValueError(f"expected {result.state.M} datasets, got {len(new_data)}")
    out = []
    for m, d in enumerate(new_data):
        X = d.X if isinstance(d, Dataset) else np.asarray(d, dtype=float)
        B = basis.transform(X, m)
        out.append(np.einsum("jnk,jk->n", B, result.state.beta[m]))
    return out


def write_trace_csv(path, result: FitResult, header: str | None = None):
    with open(path, "w", newline="") as fh:
        if header:
            fh.write(header.rstrip("\n") + "\n")
        w = csv.writer(fh)
        w.writerow(["t", "S", "j_hat", "subset_bitmask", "objective_F"])
        for row in result.trace:
            w.writerow([row.t, repr(row.S), row.j + 1, row.mask, repr(row.F)])
