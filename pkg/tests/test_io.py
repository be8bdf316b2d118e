import numpy as np
import pytest

from rnpint.core import SURVIVAL, FitConfig, fit, predict
from rnpint.data import Dataset
from rnpint.io import (
    load_csv,
    load_model,
    metadata_line,
    read_config_file,
    read_metadata,
    save_model,
    screen_covariates,
    standardize,
    write_dataset_csv,
)
from rnpint.simulate import ScenarioSpec, simulate

from test_core import make_data


def _write(path, text):
    path.write_text(text)
    return path


def test_two_files_make_two_datasets(tmp_path):
    a = _write(tmp_path / "a.csv", "y,x1,x2\n1,0.5,2\n2,1.5,3\n")
    b = _write(tmp_path / "b.csv", "y,x1,x2\n3,0.1,0.2\n")
    data = load_csv([a, b])
    assert len(data) == 2 and data[0].p == 2 and data[1].n == 1
    np.testing.assert_array_equal(data[0].X, [[0.5, 2], [1.5, 3]])


def test_bad_delta_names_row(tmp_path):
    a = _write(tmp_path / "a.csv", "# meta\ny,delta,x1\n1,1,0.5\n2,2,1.5\n")
    with pytest.raises(ValueError, match="row 4"):
        load_csv([a], "survival")


def test_permuted_columns_reordered(tmp_path):
    a = _write(tmp_path / "a.csv", "y,x1,x2\n1,10,20\n")
    b = _write(tmp_path / "b.csv", "y,x2,x1\n1,22,11\n")
    data = load_csv([a, b])
    assert data[1].covariate_names == ["x1", "x2"]
    np.testing.assert_array_equal(data[1].X, [[11, 22]])


def test_format_errors(tmp_path):
    empty = _write(tmp_path / "e.csv", "")
    with pytest.raises(ValueError, match="empty"):
        load_csv([empty])
    a = _write(tmp_path / "a.csv", "y,x1,x2\n1,1,2\n")
    b = _write(tmp_path / "b.csv", "y,x1,x3\n1,1,2\n")
    with pytest.raises(ValueError, match="differ"):
        load_csv([a, b])
    nan = _write(tmp_path / "n.csv", "y,x1\n1,2\n3,nan\n")
    with pytest.raises(ValueError, match="row 3"):
        load_csv([nan])
    short = _write(tmp_path / "s.csv", "y,x1\n1\n")
    with pytest.raises(ValueError, match="row 2"):
        load_csv([short])
    with pytest.raises(ValueError, match="delta"):
        load_csv([_write(tmp_path / "c.csv", "y,x1\n1,2\n")], "survival")
    with pytest.raises(ValueError, match="continuous"):
        load_csv([_write(tmp_path / "d.csv", "y,delta,x1\n1,1,2\n")], "continuous")


def test_time_column_is_log_transformed_and_sorted(tmp_path):
    a = _write(tmp_path / "a.csv", "time,delta,x1\n5,1,0.1\n1,0,0.2\n")
    (d,) = load_csv([a], "survival")
    np.testing.assert_allclose(d.y, [0.0, np.log(5)])
    np.testing.assert_array_equal(d.delta, [0, 1])
    np.testing.assert_array_equal(d.X[:, 0], [0.2, 0.1])


@pytest.mark.parametrize("outcome", ["continuous", "survival"])
def test_simulate_round_trip_is_bit_exact(tmp_path, outcome):
    data = simulate(ScenarioSpec(scenario=1, p=8, seed=2, outcome=outcome))
    paths = []
    for m, d in enumerate(data):
        paths.append(tmp_path / f"d{m}.csv")
        write_dataset_csv(paths[-1], d, header=metadata_line(seed=2))
    back = load_csv(paths, outcome)
    for a, b in zip(data, back):
        assert np.array_equal(a.y, b.y) and np.array_equal(a.X, b.X)
        assert (a.delta is None and b.delta is None) or np.array_equal(a.delta, b.delta)
        assert a.covariate_names == b.covariate_names


def test_standardize_modes_and_replay():
    rng = np.random.default_rng(0)
    train = [Dataset(y=rng.normal(size=50), X=rng.normal(3, 2, size=(50, 3))) for _ in range(2)]
    z, tr = standardize(train, "zscore")
    for d in z:
        np.testing.assert_allclose(d.X.mean(axis=0), 0, atol=1e-12)
        np.testing.assert_allclose(d.X.std(axis=0), 1)
    u, tru = standardize(train, "unit_range")
    for d in u:
        np.testing.assert_allclose(d.X.min(axis=0), 0, atol=1e-15)
        np.testing.assert_allclose(d.X.max(axis=0), 1)
    test = [Dataset(y=np.zeros(4), X=rng.normal(size=(4, 3))) for _ in range(2)]
    replay = tr.apply(test)
    np.testing.assert_allclose(replay[1].X, (test[1].X - train[1].X.mean(axis=0)) / train[1].X.std(axis=0))
    with pytest.raises(ValueError, match="constant"):
        standardize([Dataset(y=np.zeros(3), X=np.ones((3, 2)))])
    with pytest.raises(ValueError):
        standardize(train, "rank")


def test_screening():
    rng = np.random.default_rng(1)
    data = []
    for _ in range(2):
        X = rng.normal(size=(80, 10))
        y = np.cos(2 * X[:, 6]) * 2 + 0.3 * rng.normal(size=80)
        data.append(Dataset(y=y, X=X))
    same, ranking = screen_covariates(data, 10)
    assert [d.covariate_names for d in same] == [d.covariate_names for d in data]
    assert ranking[0][1] == "x7"
    reduced, _ = screen_covariates(data, 3)
    assert reduced[0].p == 3 and "x7" in reduced[0].covariate_names
    # duplicated column ties: smaller index first
    for d in data:
        d.X[:, 2] = d.X[:, 6]
    _, ranking = screen_covariates(data, 2)
    assert [r[0] for r in ranking[:2]] == [2, 6]
    with pytest.raises(ValueError):
        screen_covariates(data, 11)


def test_screening_survival_uses_km_weights():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(100, 5))
    y = X[:, 3] + 0.2 * rng.normal(size=100)
    d = Dataset(y=y, X=X, delta=(rng.uniform(size=100) < 0.8).astype(int)).sorted_by_time()
    _, ranking = screen_covariates([d], 1)
    assert ranking[0][0] == 3


def test_config_file(tmp_path):
    p = _write(tmp_path / "run.cfg", "# comment\nlambda = 0.25\nmethods = rnp_int,rnp_pool  # trailing\n\nn-test=7\n")
    assert read_config_file(p) == {"lambda": "0.25", "methods": "rnp_int,rnp_pool", "n_test": "7"}
    with pytest.raises(ValueError, match="line 1"):
        read_config_file(_write(tmp_path / "bad.cfg", "lambda 3\n"))


def test_metadata_line_round_trip(tmp_path):
    line = metadata_line(method="RNP-Int", seed=3, lam=0.1)
    assert line.startswith("# software=rnpint-")
    p = _write(tmp_path / "f.csv", line + "\ny\n1\n")
    assert read_metadata(p)["lam"] == "0.1" and read_metadata(p)["seed"] == "3"


def test_model_save_load_predicts_identically(tmp_path):
    data = make_data()
    res = fit(data, FitConfig(lam=0.2, T=25))
    save_model(tmp_path / "m.json", res, {"seed": 1})
    back = load_model(tmp_path / "m.json")
    for a, b in zip(predict(res, data), predict(back, data)):
        np.testing.assert_array_equal(a, b)
    assert back.config == res.config
    np.testing.assert_array_equal(back.state.group_labels, res.state.group_labels)


def test_model_round_trip_survival(tmp_path):
    data = simulate(ScenarioSpec(scenario=2, p=8, outcome="survival", seed=1))
    res = fit(data, FitConfig(T=10, outcome=SURVIVAL))
    save_model(tmp_path / "m.json", res)
    assert load_model(tmp_path / "m.json").config.outcome == SURVIVAL
