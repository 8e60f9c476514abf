import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wishart_stein.covariance import CovarianceFunction
from wishart_stein.errors import ResourceBudgetError
from wishart_stein.exact import (
    Ambient,
    Kernel,
    contract,
    contraction_norm_sq_exact,
    gram_inner,
    inner,
    norm_sq,
    symmetrize,
    tensor,
    tensor_cov_exact,
    tensor_kernel,
    variance_formula,
    variance_weights,
    wishart_cov_exact,
    wishart_kernel,
)
from wishart_stein.sampler import increasing_tuples

delta = CovarianceFunction.delta()
tables = st.lists(st.floats(-0.3, 0.3, allow_nan=False), max_size=3).map(
    lambda t: CovarianceFunction.table([1.0, *t]))


def test_gram_inner_examples():
    assert gram_inner(delta, delta, 2, 3, 2, 3) == 1.0
    assert gram_inner(delta, delta, 1, 1, 1, 2) == 0.0
    r, s = CovarianceFunction.table([1, 0.5]), CovarianceFunction.table([1, 0.3])
    assert gram_inner(r, s, 2, 2, 1, 1) == pytest.approx(0.15, abs=1e-15)


def test_kernel_merges_and_prunes():
    amb = Ambient(2, 2, delta, delta)
    f = Kernel(amb, [[1, 2], [1, 2], [2, 1]], [[1, 1], [1, 1], [2, 2]], [0.5, 0.5, 0.0])
    assert f.terms == {((1, 1), (2, 1)): 1.0}
    g = f - f
    assert len(g) == 0
    with pytest.raises(ValueError):
        Kernel(amb, [[3]], [[1]], [1.0])


def test_linear_structure():
    amb = Ambient(3, 2, CovarianceFunction.table([1, 0.4]), CovarianceFunction.table([1, 0.2]))
    f = Kernel.elementary(amb, [(1, 1), (2, 2)])
    g = Kernel.elementary(amb, [(3, 1), (1, 2)], 2.0)
    h = f + 3.0 * g
    assert inner(h, h) == pytest.approx(norm_sq(f) + 6 * inner(f, g) + 9 * norm_sq(g), rel=1e-14)
    with pytest.raises(ValueError):
        f + Kernel.elementary(amb, [(1, 1)])


def test_tensor_product_norm_factorises():
    amb = Ambient(3, 3, CovarianceFunction.table([1, 0.3]), CovarianceFunction.table([1, -0.4]))
    f = wishart_kernel(amb, 1, 2)
    g = tensor_kernel(amb, (1, 2, 3))
    assert norm_sq(tensor(f, g)) == pytest.approx(norm_sq(f) * norm_sq(g), rel=1e-13)


def test_full_contraction_is_inner():
    amb = Ambient(3, 4, CovarianceFunction.table([1, 0.3]), CovarianceFunction.table([1, 0.5]))
    f, g = tensor_kernel(amb, (1, 2)), wishart_kernel(amb, 2, 3)
    c = contract(f, g, 2)
    assert c.order == 0
    assert c.value == pytest.approx(inner(f, g), rel=1e-14)


def test_contraction_slot_convention():
    amb = Ambient(2, 1, delta, delta)
    f = Kernel.elementary(amb, [(1, 1), (2, 1)])
    g = Kernel.elementary(amb, [(2, 1), (1, 1)])
    # last slot of f meets first slot of g
    assert contract(f, g, 1).terms == {((1, 1), (1, 1)): 1.0}
    assert len(contract(g, f, 1)) == 1 and contract(g, f, 1).terms == {((2, 1), (2, 1)): 1.0}


@settings(max_examples=25, deadline=None)
@given(st.lists(st.tuples(st.integers(1, 3), st.integers(1, 2), st.integers(1, 3),
                          st.integers(1, 2), st.floats(-2, 2, allow_nan=False)),
                min_size=1, max_size=6), tables)
def test_symmetrisation_contracts_norm(terms, r):
    amb = Ambient(3, 2, r, CovarianceFunction.table([1, 0.5]))
    rows = [(a, c) for a, _, c, _, _ in terms]
    cols = [(b, e) for _, b, _, e, _ in terms]
    f = Kernel(amb, rows, cols, [w for *_, w in terms])
    sym = symmetrize(f)
    assert norm_sq(sym) <= norm_sq(f) + 1e-12
    assert norm_sq(symmetrize(sym)) == pytest.approx(norm_sq(sym), rel=1e-12, abs=1e-14)


def test_independent_wishart_contraction():
    d = 5
    amb = Ambient(1, d, delta, delta)
    f = wishart_kernel(amb, 1, 1)
    assert norm_sq(contract(f, f, 1)) == pytest.approx(1 / d, rel=1e-14)
    assert contraction_norm_sq_exact(1, d, 2, 1, (1, 1), (1, 1), delta, delta) == pytest.approx(1 / d, rel=1e-14)


def test_wishart_cov_independent():
    C = wishart_cov_exact(3, 7, delta, delta)
    expected = np.diag([2.0 if i == j else 1.0 for i, j in C.index])
    np.testing.assert_allclose(C.entries, expected, atol=1e-15)
    assert C.dim == 6 and np.asarray(C).shape == (6, 6)


@settings(max_examples=15, deadline=None)
@given(tables, tables, st.integers(1, 4), st.integers(1, 6))
def test_wishart_cov_matches_kernel_algebra(r, s, n, d):
    amb = Ambient(n, d, r, s)
    C = wishart_cov_exact(n, d, r, s)
    ks = [wishart_kernel(amb, *t) for t in C.index]
    G = np.array([[2 * inner(a, b) for b in ks] for a in ks])
    np.testing.assert_allclose(C.entries, G, rtol=1e-10, atol=1e-12)


def test_wishart_cov_diagonal_envelope():
    r = CovarianceFunction.table([1, 0.1])
    s = CovarianceFunction.table([1, 0.5, 0.2])
    C = wishart_cov_exact(5, 6, r, s)
    s2 = sum(s(k - l) ** 2 for k in range(6) for l in range(6))
    diag = np.diag(C.entries)
    assert np.all(diag >= s2 / 6 - 1e-12) and np.all(diag <= 2 * s2 / 6 + 1e-12)


def test_tensor_cov_independent():
    C2 = tensor_cov_exact(3, 5, 2, delta, delta)
    np.testing.assert_allclose(C2.entries, np.eye(3), atol=1e-15)
    C3 = tensor_cov_exact(5, 4, 3, delta, delta)
    np.testing.assert_allclose(C3.entries, np.eye(10), atol=1e-15)
    assert C3.index == tuple(increasing_tuples(5, 3))


def _perm_oracle(n, d, p, r, s):
    # direct double sum over columns and permutations
    tuples = increasing_tuples(n, p)
    out = np.zeros((len(tuples), len(tuples)))
    for a, j in enumerate(tuples):
        for b, jp in enumerate(tuples):
            perm = sum(math.prod(r(j[m] - jp[t[m]]) for m in range(p))
                       for t in itertools.permutations(range(p)))
            col = sum(s(k - l) ** p for k in range(d) for l in range(d))
            out[a, b] = perm * col / d
    return out


@pytest.mark.parametrize("n,d,p", [(4, 3, 2), (5, 4, 3), (4, 2, 4)])
def test_tensor_cov_matches_direct_sum(n, d, p):
    r = CovarianceFunction.table([1, 0.2, -0.05])
    s = CovarianceFunction.table([1, 0.4])
    np.testing.assert_allclose(tensor_cov_exact(n, d, p, r, s).entries,
                               _perm_oracle(n, d, p, r, s), rtol=1e-12, atol=1e-14)


@settings(max_examples=10, deadline=None)
@given(tables, tables, st.integers(3, 5), st.integers(1, 6), st.sampled_from([2, 3]))
def test_tensor_cov_matches_kernel_algebra(r, s, n, d, p):
    amb = Ambient(n, d, r, s)
    C = tensor_cov_exact(n, d, p, r, s)
    ks = [tensor_kernel(amb, j) for j in C.index]
    G = math.factorial(p) * np.array([[inner(a, b) for b in ks] for a in ks])
    np.testing.assert_allclose(C.entries, G, rtol=1e-10, atol=1e-12)


@pytest.mark.parametrize("p,q", [(2, 1), (3, 1), (3, 2)])
def test_contraction_closed_form_matches_algebra(p, q):
    r = CovarianceFunction.table([1, 0.25, -0.1])
    s = CovarianceFunction.table([1, -0.3, 0.2])
    n, d = 4, 4
    amb = Ambient(n, d, r, s)
    tuples = increasing_tuples(n, p)
    for j, jp in [(tuples[0], tuples[0]), (tuples[0], tuples[-1]), (tuples[1], tuples[-2])]:
        closed = contraction_norm_sq_exact(n, d, p, q, j, jp, r, s)
        algebra = norm_sq(contract(tensor_kernel(amb, j), tensor_kernel(amb, jp), q))
        assert closed == pytest.approx(algebra, rel=1e-10)


def test_contraction_arguments_checked():
    with pytest.raises(ValueError):
        contraction_norm_sq_exact(3, 3, 2, 2, (1, 2), (1, 2), delta, delta)
    with pytest.raises(ValueError):
        contraction_norm_sq_exact(2, 3, 2, 1, (1, 3), (1, 2), delta, delta)
    with pytest.raises(ResourceBudgetError):
        contraction_norm_sq_exact(6, 1000, 6, 1, tuple(range(1, 7)), tuple(range(1, 7)), delta, delta)


def test_variance_weights():
    assert variance_weights(2, True) == variance_weights(2, False) == [8]
    assert variance_weights(3, False) == [36, 288]
    assert variance_weights(3, True) == [216, 288]


def test_variance_formula_independent_p2():
    d = 4
    amb = Ambient(1, d, delta, delta)
    f = tensor_kernel(amb, (1, 1))
    assert variance_formula(2, f, f) == pytest.approx(8 / d, rel=1e-14)
    assert variance_formula(2, f, f, factorial_mode=False) == pytest.approx(8 / d, rel=1e-14)


def test_variance_formula_independent_p3():
    # F = x1 x2 x3: p^-1 |DF|^2 = (x2^2 x3^2 + x1^2 x3^2 + x1^2 x2^2) / 3, variance 4
    amb = Ambient(3, 1, delta, delta)
    f = tensor_kernel(amb, (1, 2, 3))
    assert variance_formula(3, f, f, factorial_mode=True) == pytest.approx(4.0, rel=1e-13)
    assert variance_formula(3, f, f, factorial_mode=False) != pytest.approx(4.0, rel=1e-3)
