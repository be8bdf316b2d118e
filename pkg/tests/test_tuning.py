import numpy as np
import pytest

from rnpint.core import FitConfig
from rnpint.simulate import ScenarioSpec, simulate
from rnpint.tuning import (
    DEFAULT_GRID,
    TuneSpec,
    cv_split,
    tune_lambda,
    validation_score,
    write_cv_csv,
    write_cv_curve_csv,
)

from test_core import make_data


def test_default_grid():
    assert DEFAULT_GRID == (1 / 64, 1 / 32, 1 / 16, 1 / 8, 1 / 4, 1 / 2)
    with pytest.raises(ValueError):
        TuneSpec(folds=1)
    with pytest.raises(ValueError):
        TuneSpec(lambda_grid=())
    with pytest.raises(ValueError):
        TuneSpec(lambda_grid=(0.1, -1.0))


def test_fold_sizes():
    (f,) = cv_split([100], 5, seed=0)
    assert sorted(np.bincount(f)) == [20] * 5
    (f,) = cv_split([102], 5, seed=0)
    assert sorted(np.bincount(f).tolist()) == [20, 20, 20, 21, 21]


def test_split_is_deterministic_and_per_dataset():
    a = cv_split([30, 41, 17], 4, seed=9)
    b = cv_split([30, 41, 17], 4, seed=9)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x, y)
    assert [len(x) for x in a] == [30, 41, 17]
    for x in a:
        counts = np.bincount(x, minlength=4)
        assert counts.max() - counts.min() <= 1
    c = cv_split([30, 41, 17], 4, seed=10)
    assert any(not np.array_equal(x, y) for x, y in zip(a, c))


def test_split_needs_enough_rows():
    with pytest.raises(ValueError):
        cv_split([10, 4], 5)


def test_single_value_grid():
    data = make_data(n=25)
    lam, curve = tune_lambda(data, FitConfig(T=5), TuneSpec(lambda_grid=(0.3,), seed=1))
    assert lam == 0.3
    assert curve.scores.shape == (1, 5)


def test_duplicate_grid_entries_pick_first():
    data = make_data(n=25)
    _, curve = tune_lambda(data, FitConfig(T=5), TuneSpec(lambda_grid=(0.2, 0.2, 0.2), seed=1))
    assert curve.best_index == 0
    assert np.all(curve.scores == curve.scores[0])


def test_curve_is_reproducible(tmp_path):
    data = make_data(n=25)
    spec = TuneSpec(lambda_grid=(0.01, 0.1, 1.0), seed=3)
    _, c1 = tune_lambda(data, FitConfig(T=8), spec)
    _, c2 = tune_lambda(data, FitConfig(T=8), spec)
    assert c1.mean_scores.shape == (3,)
    np.testing.assert_array_equal(c1.scores, c2.scores)
    write_cv_csv(tmp_path / "folds.csv", c1, header="# h")
    write_cv_curve_csv(tmp_path / "curve.csv", c1)
    folds = (tmp_path / "folds.csv").read_text().splitlines()
    assert folds[1] == "lambda,fold,score" and len(folds) == 2 + 15
    curve = (tmp_path / "curve.csv").read_text().splitlines()
    assert curve[0] == "lambda,mean_score" and len(curve) == 4


def test_validation_score_continuous_and_survival():
    from rnpint.data import Dataset

    d = Dataset(y=np.array([1.0, 2.0, 3.0]), X=np.zeros((3, 1)))
    assert validation_score([np.array([1.0, 1.0, 1.0])], [d]) == pytest.approx(1.0)
    s = Dataset(y=np.array([1.0, 2.0, 3.0]), X=np.zeros((3, 1)), delta=[1, 0, 1])
    # weights (1/3, 0, 2/3): errors (0, 1, 2) -> 4/3 over total weight 1
    assert validation_score([np.array([1.0, 1.0, 1.0])], [s]) == pytest.approx(4 / 3)


def test_validation_rows_do_not_leak_into_training(monkeypatch):
    import rnpint.baselines as bl

    data = make_data(n=25)
    seen = []
    orig = bl.build_expansion

    def spy(X_list, config=None):
        seen.append([X.shape[0] for X in X_list])
        return orig(X_list, config)

    monkeypatch.setattr(bl, "build_expansion", spy)
    tune_lambda(data, FitConfig(T=2), TuneSpec(lambda_grid=(0.1,), seed=0))
    assert seen == [[20, 20, 20]] * 5


def test_full_commonality_prefers_large_lambda():
    # Monte Carlo over seeded replicates: common effects reward a heavy penalty
    grid = DEFAULT_GRID
    picks = []
    for seed in range(1, 6):
        data = simulate(ScenarioSpec(scenario=2, p=6, seed=seed))
        lam, _ = tune_lambda(data, FitConfig(T=50), TuneSpec(seed=seed))
        picks.append(lam)
    upper = sum(lam >= grid[3] for lam in picks)
    assert upper > len(picks) / 2
