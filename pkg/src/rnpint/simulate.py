"""Simulation scenarios 1-4: AR(1) Gaussian covariates, additive truth, three error regimes.

Continuous responses are ``y = sum_j f_j^m(x_j) + eps``. Survival responses
follow an AFT model, ``log T = sum_j f_j^m(x_j) + eps``, with independent
``C ~ Uniform(0, u)`` and ``u`` calibrated to a target censoring rate.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .data import Dataset

SQRT6 = np.sqrt(6.0)

# tag -> unit-coefficient shape; every shape has mean zero under N(0, 1)
SHAPES = {
    "zero": lambda x: np.zeros_like(x),
    "linear": lambda x: x,
    "quadratic": lambda x: x * x - 1.0,
    "sine": np.sin,
    "sigmoid": lambda x: 6.0 / (1.0 + np.exp(-2.0 * x)) - 3.0,
    "bump": lambda x: 3.0 * np.exp(-x * x / 4.0) - SQRT6,
}


@dataclass(frozen=True)
class Component:
    tag: str = "zero"
    coef: float = 0.0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.tag == "zero" or self.coef == 0:
            return np.zeros_like(x)
        return self.coef * SHAPES[self.tag](x)

    @property
    def is_zero(self) -> bool:
        return self.tag == "zero" or self.coef == 0


ZERO = Component()


def _c(tag, coef=1.0):
    return Component(tag, float(coef))


# dataset index (0-based) -> {covariate index (0-based): component}
_SCENARIOS = {
    1: [
        {0: _c("linear"), 2: _c("sine", 3), 3: _c("sigmoid"), 5: _c("linear", 2)},
        {0: _c("linear"), 1: _c("quadratic"), 4: _c("bump")},
        {0: _c("linear"), 1: _c("quadratic"), 2: _c("sine", 3), 4: _c("bump"), 5: _c("linear", -2)},
    ],
    2: [
        {0: _c("linear"), 1: _c("quadratic"), 2: _c("sine", 2), 3: _c("sigmoid"),
         4: _c("bump"), 5: _c("linear", 2)},
    ] * 3,
    3: [
        {0: _c("linear"), 1: _c("quadratic"), 2: _c("sine", 2), 3: _c("sigmoid"),
         4: _c("bump"), 5: _c("linear", 2)},
        {1: _c("quadratic", 2), 2: _c("sine", 4), 4: _c("bump", -1), 5: _c("linear", 4)},
        {0: _c("linear", 2), 2: _c("sine", -1), 3: _c("sigmoid", -1), 5: _c("linear", -2)},
    ],
    4: [
        {0: _c("linear"), 2: _c("linear"), 3: _c("linear"), 4: _c("linear", 2),
         5: _c("linear", 2), 8: _c("linear", 1.5)},
        {0: _c("linear"), 1: _c("linear"), 3: _c("linear"), 6: _c("linear", -1),
         7: _c("linear", 2), 8: _c("linear", -1.5)},
        {0: _c("linear"), 1: _c("linear"), 2: _c("linear"), 5: _c("linear", -2),
         6: _c("linear", 2), 8: _c("linear", 3)},
    ],
}

SIGNAL_RANGE = {1: 6, 2: 6, 3: 6, 4: 9}
ERRORS = ("normal", "mix7030", "cauchy")


@dataclass(frozen=True)
class TruthTable:
    """True additive components ``f_j^m``; absent entries are zero."""

    scenario: int
    components: tuple  # one dict per dataset

    @property
    def M(self) -> int:
        return len(self.components)

    @property
    def signal_range(self) -> int:
        return SIGNAL_RANGE[self.scenario]

    def component(self, m: int, j: int) -> Component:
        return self.components[m].get(j, ZERO)

    def evaluate(self, m: int, j: int, x) -> np.ndarray:
        return self.component(m, j)(x)

    def signal(self, m: int, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        out = np.zeros(X.shape[0])
        for j, comp in sorted(self.components[m].items()):
            if j < X.shape[1]:
                out += comp(X[:, j])
        return out

    def is_nonzero(self, m: int, j: int) -> bool:
        return not self.component(m, j).is_zero

    def same(self, m1: int, m2: int, j: int) -> bool:
        a, b = self.component(m1, j), self.component(m2, j)
        if a.is_zero and b.is_zero:
            return True
        return a == b

    def labels(self, p: int) -> np.ndarray:
        """Group labels (p x M) induced by equality of the true components."""
        out = np.zeros((p, self.M), dtype=np.int64)
        for j in range(p):
            seen = []
            for m in range(self.M):
                comp = self.component(m, j)
                key = ZERO if comp.is_zero else comp
                if key not in seen:
                    seen.append(key)
                out[j, m] = seen.index(key)
        return out

    def support(self, p: int) -> np.ndarray:
        return np.array([[self.is_nonzero(m, j) for j in range(p)] for m in range(self.M)])


def truth(scenario: int) -> TruthTable:
    if scenario not in _SCENARIOS:
        raise ValueError(f"scenario must be 1-4, got {scenario}")
    return TruthTable(scenario, tuple(dict(d) for d in _SCENARIOS[scenario]))


@dataclass(frozen=True)
class ScenarioSpec:
    scenario: int = 1
    M: int = 3
    n: tuple = (100, 100, 100)
    p: int = 200
    rho: float = 0.5
    error: str = "normal"
    outcome: str = "continuous"
    target_censoring: float = 0.20
    seed: int = 0

    def __post_init__(self):
        if self.scenario not in _SCENARIOS:
            raise ValueError(f"scenario must be 1-4, got {self.scenario}")
        n = (self.n,) * self.M if np.isscalar(self.n) else tuple(int(v) for v in self.n)
        object.__setattr__(self, "n", n)
        if len(n) != self.M:
            raise ValueError("need one sample size per dataset")
        if self.M != 3:
            raise ValueError("the scenarios are defined for M = 3 datasets")
        if self.p < SIGNAL_RANGE[self.scenario]:
            raise ValueError(f"p must be >= {SIGNAL_RANGE[self.scenario]} for scenario {self.scenario}")
        if self.error not in ERRORS:
            raise ValueError(f"error must be one of {ERRORS}")
        if self.outcome not in ("continuous", "survival"):
            raise ValueError("outcome must be 'continuous' or 'survival'")


def ar1_covariates(n: int, p: int, rho: float, rng) -> np.ndarray:
    """Rows i.i.d. N(0, S) with ``S[j, k] = rho**|j - k|``, via the AR(1) recursion."""
    Z = rng.standard_normal((n, p))
    X = np.empty_like(Z)
    X[:, 0] = Z[:, 0]
    s = np.sqrt(1.0 - rho * rho)
    for j in range(1, p):
        X[:, j] = rho * X[:, j - 1] + s * Z[:, j]
    return X


def gen_covariates(spec: ScenarioSpec, rng=None) -> list:
    rng = np.random.default_rng(spec.seed) if rng is None else rng
    return [ar1_covariates(n, spec.p, spec.rho, rng) for n in spec.n]


def gen_errors(n: int, regime: str, rng):
    """Error draws; for ``mix7030`` also returns the Cauchy indicator."""
    if regime == "normal":
        return rng.standard_normal(n), np.zeros(n, dtype=bool)
    if regime == "cauchy":
        return rng.standard_cauchy(n), np.ones(n, dtype=bool)
    is_cauchy = rng.random(n) < 0.3
    eps = np.where(is_cauchy, rng.standard_cauchy(n), rng.standard_normal(n))
    return eps, is_cauchy


def gen_response(spec: ScenarioSpec, X_list, table: TruthTable, rng, u: float | None = None):
    """Continuous: list of y. Survival: list of (y, delta) on the log-time scale."""
    out = []
    for m, X in enumerate(X_list):
        eta = table.signal(m, X)
        eps, _ = gen_errors(X.shape[0], spec.error, rng)
        if spec.outcome == "continuous":
            out.append(eta + eps)
            continue
        log_t = eta + eps
        if u is None or np.isinf(u):
            out.append((log_t, np.ones(log_t.size, dtype=np.int64)))
            continue
        log_c = np.log(u * rng.random(log_t.size))
        out.append((np.minimum(log_t, log_c), (log_t <= log_c).astype(np.int64)))
    return out


def _censor_rate(log_t, log_unif, u):
    # C = u * U  =>  log C = log u + log U
    return float(np.mean(np.log(u) + log_unif < log_t))


def censoring_batch(scenario: int, error: str, p: int = 10, rho: float = 0.5,
                    size: int = 50_000, seed: int = 12345):
    """Monte Carlo draws of (log T, log U) pooled over the three datasets."""
    rng = np.random.default_rng(seed)
    table = truth(scenario)
    p = max(p, SIGNAL_RANGE[scenario])
    log_t = []
    per = size // table.M + 1
    for m in range(table.M):
        X = ar1_covariates(per, p, rho, rng)
        eps, _ = gen_errors(per, error, rng)
        log_t.append(table.signal(m, X) + eps)
    log_t = np.concatenate(log_t)[:size]
    log_unif = np.log(rng.random(log_t.size))
    return log_t, log_unif


@lru_cache(maxsize=None)
def calibrate_censoring(scenario: int, error: str, target: float = 0.20, seed: int = 12345,
                        tol: float = 0.005, max_steps: int = 60) -> float:
    """Upper bound ``u`` of the censoring uniform giving the target censoring rate.

    Bisection on ``log u`` against a fixed Monte Carlo batch (common random
    numbers keep the rate monotone in ``u``). Cached per (scenario, error).
    """
    log_t, log_unif = censoring_batch(scenario, error, seed=seed)
    lo, hi = -5.0, 5.0
    # widen until the bracket straddles the target
    for _ in range(max_steps):
        if _censor_rate(log_t, log_unif, np.exp(lo)) >= target:
            break
        lo -= 5.0
    else:
        raise RuntimeError("could not bracket the censoring rate from below")
    for _ in range(max_steps):
        if _censor_rate(log_t, log_unif, np.exp(hi)) <= target:
            break
        hi += 5.0
    else:
        raise RuntimeError("could not bracket the censoring rate from above")
    for _ in range(max_steps):
        mid = 0.5 * (lo + hi)
        rate = _censor_rate(log_t, log_unif, np.exp(mid))
        if abs(rate - target) <= tol:
            return float(np.exp(mid))
        if rate > target:
            lo = mid
        else:
            hi = mid
    raise RuntimeError("censoring calibration did not converge in 60 bisection steps")


def censoring_rate(scenario: int, error: str, u: float, seed: int = 54321) -> float:
    """Censoring rate for ``u`` on an independent Monte Carlo batch."""
    log_t, log_unif = censoring_batch(scenario, error, seed=seed)
    return _censor_rate(log_t, log_unif, u)


def simulate(spec: ScenarioSpec, rng=None) -> list:
    """Generate the M datasets of one replicate.

    Survival datasets come back sorted by observed log-time.
    """
    rng = np.random.default_rng(spec.seed) if rng is None else rng
    table = truth(spec.scenario)
    X_list = gen_covariates(spec, rng)
    u = None
    if spec.outcome == "survival":
        u = calibrate_censoring(spec.scenario, spec.error, spec.target_censoring)
    responses = gen_response(spec, X_list, table, rng, u)
    names = [f"x{j + 1}" for j in range(spec.p)]
    data = []
    for m, (X, resp) in enumerate(zip(X_list, responses)):
        if spec.outcome == "continuous":
            data.append(Dataset(y=resp, X=X, id=f"dataset{m + 1}", covariate_names=names))
        else:
            y, delta = resp
            d = Dataset(y=y, X=X, delta=delta, id=f"dataset{m + 1}", covariate_names=names)
            data.append(d.sorted_by_time())
    return data


def simulate_train_test(spec: ScenarioSpec, n_test=50):
    """Training data plus an independent test replicate drawn the same way."""
    rng = np.random.default_rng(spec.seed)
    train = simulate(spec, rng)
    n_test = (n_test,) * spec.M if np.isscalar(n_test) else tuple(n_test)
    test_spec = ScenarioSpec(**{**spec.__dict__, "n": n_test})
    test = simulate(test_spec, rng)
    return train, test


def write_truth_csv(path, table: TruthTable, p: int | None = None, header: str | None = None):
    """Sidecar rows ``m, j, tag, coef`` for every nonzero component."""
    with open(path, "w", newline="") as fh:
        if header:
            fh.write(header.rstrip("\n") + "\n")
        w = csv.writer(fh)
        w.writerow(["scenario", "m", "j", "tag", "coef"])
        for m, comps in enumerate(table.components):
            for j, comp in sorted(comps.items()):
                if p is None or j < p:
                    w.writerow([table.scenario, m + 1, j + 1, comp.tag, repr(comp.coef)])


def read_truth_csv(path) -> TruthTable:
    comps = {}
    scenario = None
    with open(path, newline="") as fh:
        rows = [line for line in fh if not line.startswith("#")]
    for rec in csv.DictReader(rows):
        scenario = int(rec["scenario"])
        comps.setdefault(int(rec["m"]) - 1, {})[int(rec["j"]) - 1] = Component(rec["tag"], float(rec["coef"]))
    M = max(comps) + 1 if comps else 0
    return TruthTable(scenario, tuple(comps.get(m, {}) for m in range(M)))
