"""Reading and writing datasets, preprocessing, and run metadata."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .basis import BasisConfig, BasisExpansion, build_knots, center, expand
from .core import SURVIVAL, FitConfig, FitResult
from .data import Dataset
from .loss import LossSpec, km_weights
from .state import CoefficientState

__version__ = "0.1.0"


# ---------------------------------------------------------------------------
# metadata


def metadata_line(**fields) -> str:
    """One ``#``-prefixed line of ``key=value`` pairs, in the given order."""
    parts = [f"software=rnpint-{__version__}"]
    for k, v in fields.items():
        if v is None:
            continue
        if isinstance(v, float):
            v = repr(v)
        parts.append(f"{k}={v}")
    return "# " + " ".join(parts)


def config_metadata(config: FitConfig, method: str, seed=None) -> dict:
    return {
        "method": method,
        "seed": seed,
        "lambda": float(config.lam),
        "c": float(config.loss.c),
        "v": float(config.v),
        "T": config.T,
        "K": config.basis.K,
        "loss": config.loss.kind,
        "outcome": config.outcome,
    }


def read_metadata(path) -> dict:
    """Parse ``key=value`` pairs from the leading ``#`` lines of a file."""
    out = {}
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            for tok in line[1:].split():
                if "=" in tok:
                    k, v = tok.split("=", 1)
                    out[k] = v
    return out


# ---------------------------------------------------------------------------
# CSV datasets


def write_dataset_csv(path, data: Dataset, header: str | None = None):
    """Columns ``y``, ``delta`` (survival only), then the covariates."""
    with open(path, "w", newline="") as fh:
        if header:
            fh.write(header.rstrip("\n") + "\n")
        w = csv.writer(fh)
        cols = ["y"] + (["delta"] if data.delta is not None else []) + list(data.covariate_names)
        w.writerow(cols)
        for i in range(data.n):
            row = [repr(float(data.y[i]))]
            if data.delta is not None:
                row.append(int(data.delta[i]))
            row.extend(repr(float(x)) for x in data.X[i])
            w.writerow(row)


def _read_one(path, outcome: str):
    with open(path, newline="") as fh:
        lines = [(k + 1, line) for k, line in enumerate(fh)
                 if line.strip() and not line.startswith("#")]
    if not lines:
        raise ValueError(f"{path}: empty file")
    reader = csv.reader([line for _, line in lines])
    header = [h.strip() for h in next(reader)]
    if not header or header[0] not in ("y", "time"):
        raise ValueError(f"{path}: first column must be 'y' (log-time for survival) or 'time'")
    has_delta = len(header) > 1 and header[1] == "delta"
    if outcome == SURVIVAL and not has_delta:
        raise ValueError(f"{path}: survival data needs a 'delta' column after the response")
    if outcome != SURVIVAL and has_delta:
        raise ValueError(f"{path}: 'delta' column given for a continuous outcome")
    if header[0] == "time" and outcome != SURVIVAL:
        raise ValueError(f"{path}: 'time' column is only valid for survival data")
    start = 2 if has_delta else 1
    names = header[start:]
    if not names:
        raise ValueError(f"{path}: no covariate columns")
    if len(set(names)) != len(names):
        raise ValueError(f"{path}: duplicated covariate names")
    rows = list(reader)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    y = np.empty(len(rows))
    delta = np.empty(len(rows), dtype=np.int64) if has_delta else None
    X = np.empty((len(rows), len(names)))
    for i, (row, (lineno, _)) in enumerate(zip(rows, lines[1:])):
        if len(row) != len(header):
            raise ValueError(f"{path}: row {lineno} has {len(row)} fields, expected {len(header)}")
        try:
            vals = [float(v) for v in row]
        except ValueError as exc:
            raise ValueError(f"{path}: row {lineno}: {exc}") from None
        if any(math.isnan(v) for v in vals):
            raise ValueError(f"{path}: row {lineno} contains NaN")
        if has_delta:
            if vals[1] not in (0.0, 1.0):
                raise ValueError(f"{path}: row {lineno} has delta={row[1]!r}, expected 0 or 1")
            delta[i] = int(vals[1])
        if header[0] == "time":
            if vals[0] <= 0:
                raise ValueError(f"{path}: row {lineno} has nonpositive time")
            vals[0] = math.log(vals[0])
        y[i] = vals[0]
        X[i] = vals[start:]
    return y, delta, X, names


def load_csv(paths, outcome: str = "continuous") -> list:
    """Read one dataset per file.

    Columns are ``y`` (or ``time``, which is log-transformed) then, for
    survival data, ``delta``, then the covariates. Lines starting with ``#``
    are skipped. Covariates are reordered to the column order of the first
    file; survival rows are sorted by time.
    """
    outcome = SURVIVAL if outcome in ("survival", SURVIVAL) else outcome
    if isinstance(paths, (str, bytes)) or hasattr(paths, "__fspath__"):
        paths = [paths]
    out, canon = [], None
    for m, path in enumerate(paths):
        y, delta, X, names = _read_one(path, outcome)
        if canon is None:
            canon = names
        elif set(names) != set(canon):
            extra = sorted(set(names) ^ set(canon))
            raise ValueError(f"{path}: covariate names differ from the first file ({', '.join(extra)})")
        order = [names.index(c) for c in canon]
        d = Dataset(y=y, X=X[:, order], delta=delta, id=str(path), covariate_names=list(canon))
        out.append(d.sorted_by_time() if delta is not None else d)
    return out


# ---------------------------------------------------------------------------
# standardization


@dataclass
class Standardizer:
    """Per-dataset, per-covariate affine maps ``(x - shift) / scale``."""

    mode: str
    shift: list = field(default_factory=list)
    scale: list = field(default_factory=list)

    def apply(self, data) -> list:
        data = list(data)
        if len(data) != len(self.shift):
            raise ValueError(f"transform was fitted on {len(self.shift)} datasets, got {len(data)}")
        return [replace(d, X=(d.X - a) / b, covariate_names=list(d.covariate_names))
                for d, a, b in zip(data, self.shift, self.scale)]


def standardize(data, mode: str = "zscore"):
    """Fit a per-dataset column transform and apply it.

    ``zscore`` gives every column mean 0 and standard deviation 1;
    ``unit_range`` maps every column onto [0, 1]. Returns
    ``(transformed data, Standardizer)``; reuse the standardizer on test data.
    """
    if mode not in ("zscore", "unit_range"):
        raise ValueError(f"unknown standardization {mode!r}")
    tr = Standardizer(mode)
    for d in data:
        if mode == "zscore":
            a, b = d.X.mean(axis=0), d.X.std(axis=0)
        else:
            a = d.X.min(axis=0)
            b = d.X.max(axis=0) - a
        bad = np.nonzero(b <= 0)[0]
        if bad.size:
            raise ValueError(f"dataset {d.id!r}: constant column {d.covariate_names[bad[0]]!r}")
        tr.shift.append(a)
        tr.scale.append(b)
    return tr.apply(data), tr


# ---------------------------------------------------------------------------
# screening


def _marginal_reduction(x_list, y_list, w_list, basis: BasisConfig) -> float:
    knots = build_knots(np.concatenate(x_list), basis)
    gain = 0.0
    for x, y, w in zip(x_list, y_list, w_list):
        B, _ = center(expand(x, knots, basis))
        D = np.column_stack([np.ones_like(y), B])
        sw = np.sqrt(w)
        coef, *_ = np.linalg.lstsq(D * sw[:, None], y * sw, rcond=None)
        ybar = np.dot(w, y) / w.sum()
        null = float(np.dot(w, (y - ybar) ** 2))
        resid = float(np.dot(w, (y - D @ coef) ** 2))
        gain += null - resid
    return gain


def screen_covariates(data, top_k: int, basis: BasisConfig | None = None):
    """Keep the ``top_k`` covariates with the largest marginal spline fit.

    Each covariate is scored by the drop in weighted residual sum of squares
    from an intercept-only model to a marginal spline model, summed over
    datasets. Weights are ``1/n`` (continuous) or Kaplan-Meier weights on
    log-time (survival). Ties keep the smaller column index first.

    Returns ``(reduced data, ranking)`` where ``ranking`` lists
    ``(column index, name, score)`` from best to worst.
    """
    data = list(data)
    p = data[0].p
    if not 1 <= top_k <= p:
        raise ValueError(f"top_k must be in [1, {p}]")
    basis = basis or BasisConfig()
    ws = [km_weights(d.y, d.delta) if d.delta is not None else np.full(d.n, 1.0 / d.n) for d in data]
    scores = np.array([
        _marginal_reduction([d.X[:, j] for d in data], [d.y for d in data], ws, basis)
        for j in range(p)
    ])
    order = np.argsort(-scores, kind="stable")
    names = data[0].covariate_names
    ranking = [(int(j), names[j], float(scores[j])) for j in order]
    keep = sorted(int(j) for j in order[:top_k])
    return [d.with_columns(keep) for d in data], ranking


def write_ranking_csv(path, ranking, header: str | None = None):
    with open(path, "w", newline="") as fh:
        if header:
            fh.write(header.rstrip("\n") + "\n")
        w = csv.writer(fh)
        w.writerow(["rank", "covariate", "score_marginal_spline_rss_reduction"])
        for r, (_, name, score) in enumerate(ranking, start=1):
            w.writerow([r, name, repr(score)])


# ---------------------------------------------------------------------------
# run configuration files


def read_config_file(path) -> dict:
    """Flat ``key = value`` text; ``#`` starts a comment. Values stay strings."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}: line {lineno} is not 'key = value'")
            k, v = line.split("=", 1)
            out[k.strip().replace("-", "_")] = v.strip()
    return out


# ---------------------------------------------------------------------------
# fitted models


def save_model(path, result: FitResult, metadata: dict | None = None):
    """JSON with everything needed to predict on new data."""
    b, cfg = result.basis, result.config
    doc = {
        "metadata": {"software": f"rnpint-{__version__}", **(metadata or {})},
        "method": result.method,
        "covariate_names": list(result.covariate_names),
        "config": {
            "loss": cfg.loss.kind, "c": cfg.loss.c, "lam": cfg.lam, "v": cfg.v, "T": cfg.T,
            "outcome": cfg.outcome, "loss_scale": cfg.loss_scale, "pen_in_sum": cfg.pen_in_sum,
            "degree": b.config.degree, "K": b.config.K, "n_inner_knots": b.config.n_inner_knots,
            "parametric_mode": b.config.parametric_mode,
        },
        "t_star": result.t_star,
        "knots": [k.tolist() for k in b.knots],
        "column_means": b.column_means.tolist(),
        "beta": result.state.beta.tolist(),
        "group_labels": result.state.group_labels.tolist(),
        "updated": result.state.updated.tolist(),
        "S": [row.S for row in result.trace],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)


def load_model(path) -> FitResult:
    with open(path) as fh:
        doc = json.load(fh)
    c = doc["config"]
    bcfg = BasisConfig(degree=c["degree"], K=c["K"], n_inner_knots=c["n_inner_knots"],
                       parametric_mode=c["parametric_mode"])
    cfg = FitConfig(loss=LossSpec(c["loss"], c["c"]), lam=c["lam"], v=c["v"], T=c["T"],
                    basis=bcfg, outcome=c["outcome"], loss_scale=c["loss_scale"],
                    pen_in_sum=c["pen_in_sum"])
    basis = BasisExpansion(config=bcfg, knots=[np.array(k) for k in doc["knots"]],
                           column_means=np.array(doc["column_means"]), blocks=[])
    state = CoefficientState(beta=np.array(doc["beta"]),
                             group_labels=np.array(doc["group_labels"], dtype=np.int64),
                             updated=np.array(doc["updated"], dtype=bool))
    return FitResult(state=state, t_star=doc["t_star"], trace=[], fitted_values=[], basis=basis,
                     config=cfg, covariate_names=doc["covariate_names"], method=doc["method"])


def function_grid(result: FitResult, n_points: int = 100):
    """Rows ``(covariate, dataset, x, fhat)`` over each selected covariate's knot range.

    A covariate is exported for every dataset once it is selected in any of
    them, so absent effects show up as flat zero lines.
    """
    rows = []
    selected = np.nonzero(result.state.updated.any(axis=0))[0]
    for j in selected:
        kn = result.basis.knots[j]
        xs = np.linspace(kn[0], kn[-1], n_points)
        for m in range(result.state.M):
            fx = result.component(m, j, xs)
            rows.extend((result.covariate_names[j], m + 1, float(x), float(f)) for x, f in zip(xs, fx))
    return rows


def write_function_grid_csv(path, result: FitResult, n_points: int = 100, header: str | None = None):
    with open(path, "w", newline="") as fh:
        if header:
            fh.write(header.rstrip("\n") + "\n")
        w = csv.writer(fh)
        w.writerow(["covariate", "dataset", "x", "fhat"])
        for name, m, x, f in function_grid(result, n_points):
            w.writerow([name, m, repr(x), repr(f)])
