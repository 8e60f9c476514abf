import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wishart_stein.covariance import CovarianceFunction
from wishart_stein.exact import tensor_cov_exact, wishart_cov_exact
from wishart_stein.rng import generator, map_blocks
from wishart_stein.sampler import (
    EnsembleSpec,
    half_index,
    half_vectorize,
    malliavin_batch,
    malliavin_inner,
    malliavin_replicates,
    pairings,
    sample_gaussian_vector,
    sample_matrix,
    tensor_entries,
    tensor_replicates,
    tensor_sample,
    wick_product,
    wishart,
    wishart_replicates,
)

delta = CovarianceFunction.delta()
M = 100_000


def within(est, target, se, k=5.0):
    return abs(est - target) <= k * se


def test_iid_entry_variance():
    spec = EnsembleSpec(2, 3, delta, delta, seed=3)
    X = spec.draw(generator(3, 0), M)
    v = X[:, 0, 0]
    var = v.var(ddof=1)
    se = math.sqrt((np.mean((v - v.mean()) ** 4) - var**2) / M)
    assert within(var, 1.0, se)


def test_row_correlation_recovered():
    spec = EnsembleSpec(2, 2, CovarianceFunction.table([1, 0.5]), delta, seed=4)
    X = spec.draw(generator(4, 0), M)
    prod = X[:, 0, 0] * X[:, 1, 0]
    assert within(prod.mean(), 0.5, prod.std(ddof=1) / math.sqrt(M))


@pytest.mark.parametrize("n,d", [(3, 4), (8, 8)])
def test_empirical_covariance_is_kronecker(n, d):
    r = CovarianceFunction.table([1, 0.4, 0.1])
    s = CovarianceFunction.exponential(1.0)
    spec = EnsembleSpec(n, d, r, s, seed=5)
    X = spec.draw(generator(5, 0), M).reshape(M, -1)
    i, j = np.divmod(np.arange(n * d), d)
    target = r(np.subtract.outer(i, i)) * s(np.subtract.outer(j, j))
    emp = X.T @ X / M
    se = np.sqrt((X**2).T @ (X**2) / M - emp**2) / math.sqrt(M)
    assert np.all(np.abs(emp - target) <= 5 * se + 1e-12)


def test_sample_matrix_deterministic():
    spec = EnsembleSpec(3, 5, delta, CovarianceFunction.table([1, 0.3]), seed=11)
    a, b = sample_matrix(spec), sample_matrix(spec)
    assert a.tobytes() == b.tobytes()
    assert not np.array_equal(a, sample_matrix(EnsembleSpec(3, 5, delta, spec.s, seed=12)))


def test_replicates_independent_of_workers():
    spec = EnsembleSpec(3, 7, CovarianceFunction.table([1, 0.2]), delta, seed=2)
    a = wishart_replicates(spec, 5000, workers=1)
    b = wishart_replicates(spec, 5000, workers=4)
    assert a.tobytes() == b.tobytes()


def test_map_blocks_layout():
    calls = []

    def fn(rng, count):
        calls.append(count)
        return np.full((count, 1), rng.integers(1 << 30))

    out = map_blocks(fn, 10, per_replicate=1 << 20, seed=0)
    assert out.shape == (10, 1) and calls == [2] * 5
    assert map_blocks(fn, 0, 1, seed=0) is None


def test_wishart_examples():
    W = wishart(np.array([[2.0]]), delta)
    assert W[0, 0] == 3.0
    W = wishart(np.eye(2), delta, d=2)
    assert W[0, 0] == pytest.approx(-1 / math.sqrt(2), abs=1e-15)
    assert W[0, 1] == 0.0
    with pytest.raises(ValueError):
        wishart(np.eye(2), delta, d=3)


def test_wishart_centered():
    spec = EnsembleSpec(3, 4, CovarianceFunction.table([1, 0.3]), CovarianceFunction.exponential(2.0), seed=9)
    W = wishart_replicates(spec, M)
    se = W.std(axis=0, ddof=1) / math.sqrt(M)
    assert np.all(np.abs(W.mean(axis=0)) <= 5 * se)


def test_half_vectorize():
    a, b, c = 1.5, -2.0, 0.25
    np.testing.assert_array_equal(half_vectorize([[a, b], [b, c]]), [a, b, c])
    np.testing.assert_array_equal(half_vectorize(np.eye(3)), [1, 0, 0, 1, 0, 1])
    assert half_vectorize(np.eye(5)).shape == (15,)
    assert half_index(3) == [(1, 1), (1, 2), (1, 3), (2, 2), (2, 3), (3, 3)]
    with pytest.raises(ValueError):
        half_vectorize([[1.0, 2.0], [0.0, 1.0]])


def test_pairings_count():
    # telephone numbers
    assert [len(pairings(p)) for p in range(7)] == [1, 1, 2, 4, 10, 26, 76]


def test_wick_examples():
    c = np.array([[1.0, 0.3], [0.3, 1.0]])
    assert wick_product([1.5, -2.0], c) == pytest.approx(1.5 * -2.0 - 0.3)
    assert wick_product([2.0, 3.0, 4.0], np.zeros((3, 3))) == 24.0
    c = np.zeros((3, 3))
    c[0, 1] = c[1, 0] = 1.0
    assert wick_product([1.0, 1.0, 2.0], c) == 0.0
    assert wick_product([1.0] * 4, np.ones((4, 4))) == -2.0
    with pytest.raises(ValueError):
        wick_product(np.ones(7), np.eye(7))


@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 3, allow_nan=False), st.integers(1, 6))
def test_wick_equal_arguments_is_hermite(t, p):
    # probabilists' Hermite polynomial He_p
    herm = np.polynomial.hermite_e.hermeval(t, [0] * p + [1])
    assert wick_product([t] * p, np.ones((p, p))) == pytest.approx(herm, abs=1e-9)


def test_tensor_p2_matches_wishart():
    spec = EnsembleSpec(4, 6, CovarianceFunction.table([1, 0.3]), CovarianceFunction.table([1, -0.2]), seed=8)
    X = sample_matrix(spec)
    W = wishart(X, spec.r)
    Y = tensor_sample(spec, 2, X)
    for (i, j) in Y.index:
        assert Y[(i, j)] == pytest.approx(W[i - 1, j - 1], abs=1e-12)
    assert len(Y) == 6


def test_tensor_centered_and_unit_variance():
    spec = EnsembleSpec(3, 4, delta, delta, seed=21)
    Y = tensor_replicates(spec, 3, M)[:, 0]
    se = Y.std(ddof=1) / math.sqrt(M)
    assert within(Y.mean(), 0.0, se)
    var = Y.var(ddof=1)
    var_se = math.sqrt((np.mean((Y - Y.mean()) ** 4) - var**2) / M)
    assert within(var, 1.0, var_se)
    assert tensor_cov_exact(3, 4, 3, delta, delta).entries[0, 0] == pytest.approx(1.0)


def test_tensor_entries_match_scalar_wick():
    r = CovarianceFunction.table([1, 0.4, -0.1])
    X = np.random.default_rng(1).normal(size=(4, 3))
    j = (1, 2, 4)
    c = r(np.subtract.outer(np.array(j), np.array(j)))
    manual = sum(wick_product(X[np.array(j) - 1, k], c) for k in range(3)) / math.sqrt(3)
    assert tensor_entries(X, [j], r)[0] == pytest.approx(manual, abs=1e-12)


def test_tensor_order_checked():
    spec = EnsembleSpec(2, 3, delta, delta)
    with pytest.raises(ValueError):
        tensor_sample(spec, 3)


def test_malliavin_mean_equals_product_moment():
    r = CovarianceFunction.table([1, 0.3])
    s = CovarianceFunction.table([1, 0.4])
    spec = EnsembleSpec(3, 4, r, s, seed=31)
    out = malliavin_replicates(spec, (1, 2), (2, 3), M)
    V, FG = out[:, 0], out[:, 1] * out[:, 2]
    C = tensor_cov_exact(3, 4, 2, r, s)
    exact = C.entries[C.index.index((1, 2)), C.index.index((2, 3))]
    assert within(V.mean(), exact, V.std(ddof=1) / math.sqrt(M))
    assert within(FG.mean(), exact, FG.std(ddof=1) / math.sqrt(M))


def test_malliavin_diagonal_wishart_mean():
    spec = EnsembleSpec(2, 5, delta, delta, seed=32)
    V = malliavin_replicates(spec, (1, 1), (1, 1), M)[:, 0]
    assert within(V.mean(), 2.0, V.std(ddof=1) / math.sqrt(M))


def test_malliavin_independent_closed_form():
    # independent case, j = (1, 1): half of |D W_11|^2 is 2/d sum_k X_1k^2
    X = np.random.default_rng(2).normal(size=(2, 6))
    val = malliavin_batch(X, (1, 1), (1, 1), delta, delta)
    assert val == pytest.approx(2 / 6 * np.sum(X[0] ** 2), rel=1e-13)


def test_malliavin_inner_deterministic():
    spec = EnsembleSpec(3, 4, CovarianceFunction.table([1, 0.2]), delta, seed=5)
    X = sample_matrix(spec)
    assert malliavin_inner(spec, 2, (1, 2), (1, 3), X) == malliavin_inner(spec, 2, (1, 2), (1, 3), X)
    with pytest.raises(ValueError):
        malliavin_inner(spec, 3, (1, 2), (1, 3), X)


def test_gaussian_vector_identity():
    G = sample_gaussian_vector(np.eye(3), seed=1, size=M)
    emp = G.T @ G / M
    se = np.sqrt((G**2).T @ (G**2) / M - emp**2) / math.sqrt(M)
    assert np.all(np.abs(emp - np.eye(3)) <= 5 * se)


def test_gaussian_vector_wishart_covariance():
    C = wishart_cov_exact(2, 10, delta, delta).entries
    G = sample_gaussian_vector(C, seed=2, size=M)
    emp = G.T @ G / M
    se = np.sqrt((G**2).T @ (G**2) / M - emp**2) / math.sqrt(M)
    assert np.all(np.abs(emp - C) <= 5 * se)


def test_gaussian_vector_zero_and_single():
    np.testing.assert_array_equal(sample_gaussian_vector(np.zeros((4, 4)), seed=0), 0.0)
    a = sample_gaussian_vector(np.eye(2), seed=7)
    assert a.shape == (2,) and np.array_equal(a, sample_gaussian_vector(np.eye(2), seed=7))


def test_spec_validation():
    with pytest.raises(ValueError):
        EnsembleSpec(0, 3, delta, delta)
    with pytest.raises(ValueError):
        EnsembleSpec(2, 3, delta, delta, seed=-1)
