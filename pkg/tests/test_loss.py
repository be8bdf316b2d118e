import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rnpint.loss import (
    LEAST_SQUARES,
    LossSpec,
    dataset_loss,
    irls_weights,
    km_weights,
    loss_gradient,
    psi,
    rho,
    sort_by_time,
)


def km_oracle(y, delta):
    """Jumps of the product-limit survival curve, computed by a plain loop."""
    n = len(y)
    surv, prev, out = 1.0, 1.0, []
    for i in range(n):
        at_risk = n - i
        if delta[i]:
            surv *= 1.0 - 1.0 / at_risk
        out.append(prev - surv)
        prev = surv
    return np.array(out)


def test_cauchy_values():
    assert rho(0.0) == 0.0
    assert rho(1.0) == pytest.approx(np.log(2.0))
    assert rho(2.0, LossSpec(c=2.0)) == pytest.approx(np.log(2.0))
    assert psi(1.0) == pytest.approx(1.0)
    assert irls_weights(3.0) == pytest.approx(2.0 / 10.0)


def test_least_squares_values():
    spec = LossSpec(LEAST_SQUARES)
    assert rho(3.0, spec) == 9.0 and psi(3.0, spec) == 6.0


def test_cauchy_influence_is_bounded_and_redescends():
    r = np.linspace(-1e4, 1e4, 20001)
    assert np.max(np.abs(psi(r))) <= 1.0 + 1e-12
    assert abs(psi(1e6)) < 1e-5


def test_bad_spec():
    with pytest.raises(ValueError):
        LossSpec("huber")
    with pytest.raises(ValueError):
        LossSpec(c=0.0)


def test_gradient_matches_central_differences_on_100_instances():
    rng = np.random.default_rng(11)
    h = 1e-6
    for _ in range(100):
        n, K = rng.integers(5, 40), rng.integers(1, 7)
        r = rng.standard_cauchy(n)
        B = rng.normal(size=(n, K))
        w = rng.uniform(0.1, 2.0, n)
        spec = LossSpec(c=rng.uniform(0.5, 2.0))
        g = loss_gradient(r, B, w, spec)
        fd = np.empty(K)
        for k in range(K):
            e = np.zeros(K)
            e[k] = h
            fd[k] = (dataset_loss(r - B @ e, w, spec) - dataset_loss(r + B @ e, w, spec)) / (2 * h)
        rel = np.linalg.norm(g - fd) / max(np.linalg.norm(fd), 1e-12)
        assert rel < 1e-5


def test_dataset_loss_weights():
    r = np.array([1.0, 0.0, 2.0])
    assert dataset_loss(r) == pytest.approx(np.log(2) + np.log(5))
    assert dataset_loss(r, [0.5, 1, 0]) == pytest.approx(0.5 * np.log(2))
    with pytest.raises(ValueError):
        dataset_loss(r, [1.0, 1.0])


def test_km_weights_hand_case():
    np.testing.assert_allclose(km_weights([1.0, 2.0, 3.0], [1, 0, 1]), [1 / 3, 0, 2 / 3])


def test_km_weights_uniform_without_censoring():
    for n in (1, 2, 7, 100):
        np.testing.assert_allclose(km_weights(np.arange(n, dtype=float), np.ones(n)), 1.0 / n)


def test_km_weights_errors():
    with pytest.raises(ValueError, match="sorted"):
        km_weights([2.0, 1.0], [1, 1])
    with pytest.raises(ValueError):
        km_weights([1.0, 2.0], [1, 2])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.floats(-5, 5), st.booleans()), min_size=1, max_size=60))
def test_km_weights_match_product_limit_jumps(records):
    records.sort(key=lambda t: t[0])
    y = np.array([t[0] for t in records])
    d = np.array([int(t[1]) for t in records])
    w = km_weights(y, d)
    np.testing.assert_allclose(w, km_oracle(y, d), atol=1e-12)
    assert np.all(w >= 0) and w.sum() <= 1 + 1e-12
    assert np.all(w[d == 0] == 0)
    if d[-1] == 1:
        assert w.sum() == pytest.approx(1.0)


def test_sort_by_time_is_stable():
    y, d, idx = sort_by_time([2.0, 1.0, 2.0], [1, 0, 0], [0, 1, 2])
    np.testing.assert_array_equal(y, [1.0, 2.0, 2.0])
    np.testing.assert_array_equal(idx, [1, 0, 2])
