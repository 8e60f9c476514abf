"""Exact second-order structure of the Wishart and tensor chaos elements.

Two independent routes are provided:

* a generic finite kernel algebra (:class:`Kernel`) over the basis
  ``e_{ik}`` (row ``i``, column ``k``) with Gram ``r(i - i') s(k - k')``,
  supporting contraction, symmetrisation and Gram inner products;
* closed forms (``wishart_cov_exact``, ``tensor_cov_exact``,
  ``contraction_norm_sq_exact``) that exploit the separable structure.

The kernel algebra is the oracle for the closed forms.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import _kernels
from .covariance import lag_sum, toeplitz_values
from .errors import ResourceBudgetError
from .sampler import half_index, increasing_tuples

MAX_EXACT_ORDER = 6
DEFAULT_BUDGET = 1e12


@dataclass(frozen=True)
class Ambient:
    """Index ranges and covariances of the basis ``e_{ik}``."""

    n: int
    d: int
    r: object
    s: object

    @cached_property
    def R(self):
        return toeplitz_values(self.r, self.n)

    @cached_property
    def S(self):
        return toeplitz_values(self.s, self.d)


def gram_inner(r, s, u, k, v, l):
    """``<e_{uk}, e_{vl}> = r(u - v) s(k - l)``."""
    return float(r(u - v) * s(k - l))


class Kernel:
    """Finite linear combination of elementary tensors ``e_{i_1 k_1} x ... x e_{i_p k_p}``.

    ``rows`` and ``cols`` are ``(T, p)`` integer arrays of 1-based labels,
    ``coef`` the ``(T,)`` coefficients.  Duplicate index tuples are merged and
    exactly-zero coefficients dropped on construction.
    """

    __slots__ = ("ambient", "rows", "cols", "coef")

    def __init__(self, ambient, rows, cols, coef, merge=True):
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        coef = np.asarray(coef, dtype=float).reshape(-1)
        if rows.ndim != 2 or rows.shape != cols.shape or rows.shape[0] != coef.shape[0]:
            raise ValueError("rows, cols and coef have inconsistent shapes")
        if rows.size and (rows.min() < 1 or rows.max() > ambient.n
                          or cols.min() < 1 or cols.max() > ambient.d):
            raise ValueError("basis index out of ambient range")
        self.ambient = ambient
        if merge:
            rows, cols, coef = _merge(rows, cols, coef)
        self.rows, self.cols, self.coef = rows, cols, coef

    @property
    def order(self):
        return self.rows.shape[1]

    def __len__(self):
        return self.coef.shape[0]

    @property
    def terms(self):
        return {tuple(zip(map(int, r), map(int, c))): float(w)
                for r, c, w in zip(self.rows, self.cols, self.coef)}

    @property
    def value(self):
        """The scalar held by an order-0 kernel (a full contraction)."""
        if self.order != 0:
            raise ValueError("only order-0 kernels are scalars")
        return float(np.sum(self.coef))

    @classmethod
    def elementary(cls, ambient, pairs, coef=1.0):
        pairs = np.asarray(pairs, dtype=np.int64).reshape(1, -1, 2)
        return cls(ambient, pairs[..., 0], pairs[..., 1], [coef])

    @classmethod
    def zero(cls, ambient, order):
        return cls(ambient, np.zeros((0, order)), np.zeros((0, order)), [])

    # linear structure -----------------------------------------------------
    def _check(self, other):
        if self.ambient is not other.ambient and self.ambient != other.ambient:
            raise ValueError("kernels live in different ambient spaces")

    def __add__(self, other):
        self._check(other)
        if self.order != other.order:
            raise ValueError(f"cannot add kernels of order {self.order} and {other.order}")
        return Kernel(self.ambient, np.vstack([self.rows, other.rows]),
                      np.vstack([self.cols, other.cols]),
                      np.concatenate([self.coef, other.coef]))

    def __mul__(self, scalar):
        return Kernel(self.ambient, self.rows, self.cols, self.coef * float(scalar), merge=False)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-other)

    def __repr__(self):
        return f"Kernel(order={self.order}, terms={len(self)})"


def _merge(rows, cols, coef):
    if coef.size == 0:
        return rows, cols, coef
    if rows.shape[1] == 0:
        total = float(np.sum(coef))
        keep = 1 if total != 0.0 else 0
        return rows[:keep], cols[:keep], np.array([total])[:keep]
    keys = np.hstack([rows, cols])
    uniq, inv = np.unique(keys, axis=0, return_inverse=True)
    summed = np.bincount(inv.reshape(-1), weights=coef, minlength=uniq.shape[0])
    keep = summed != 0.0
    p = rows.shape[1]
    return uniq[keep, :p], uniq[keep, p:], summed[keep]


add = Kernel.__add__


def scale(f, c):
    return f * c


def tensor(f, g):
    """``f x g``: all pairs of terms, slots of ``f`` first."""
    f._check(g)
    tf, tg = len(f), len(g)
    rows = np.hstack([np.repeat(f.rows, tg, axis=0), np.tile(g.rows, (tf, 1))])
    cols = np.hstack([np.repeat(f.cols, tg, axis=0), np.tile(g.cols, (tf, 1))])
    return Kernel(f.ambient, rows, cols, np.outer(f.coef, g.coef).reshape(-1))


def contract(f, g, q):
    """``q``-contraction: the last ``q`` slots of ``f`` against the first ``q`` of ``g``."""
    f._check(g)
    if not 0 <= q <= min(f.order, g.order):
        raise ValueError(f"cannot contract {q} slots of kernels of order {f.order}, {g.order}")
    amb = f.ambient
    pf, pg = f.order, g.order
    # weight[a, b] = coef_f[a] coef_g[b] prod_m <slot pf-q+m of a, slot m of b>
    w = np.outer(f.coef, g.coef)
    for m in range(q):
        w = w * amb.R[f.rows[:, pf - q + m][:, None] - 1, g.rows[:, m][None, :] - 1]
        w = w * amb.S[f.cols[:, pf - q + m][:, None] - 1, g.cols[:, m][None, :] - 1]
    a_idx, b_idx = np.nonzero(w)
    rows = np.hstack([f.rows[a_idx, : pf - q], g.rows[b_idx, q:]])
    cols = np.hstack([f.cols[a_idx, : pf - q], g.cols[b_idx, q:]])
    return Kernel(amb, rows, cols, w[a_idx, b_idx])


def symmetrize(f):
    """Average of ``f`` over all permutations of its slots."""
    p = f.order
    perms = list(itertools.permutations(range(p)))
    rows = np.vstack([f.rows[:, perm] for perm in perms])
    cols = np.vstack([f.cols[:, perm] for perm in perms])
    coef = np.tile(f.coef, len(perms)) / len(perms)
    return Kernel(f.ambient, rows, cols, coef)


def inner(f, g):
    """Gram inner product on the ``order``-fold tensor power."""
    f._check(g)
    if f.order != g.order:
        raise ValueError(f"inner product of kernels of order {f.order} and {g.order}")
    if f.order == 0:
        return float(np.sum(f.coef) * np.sum(g.coef))
    amb = f.ambient
    return _kernels.gram_bilinear(f.rows - 1, f.cols - 1, f.coef,
                                  g.rows - 1, g.cols - 1, g.coef, amb.R, amb.S)


def norm_sq(f):
    return inner(f, f)


# ---------------------------------------------------------------------------
# kernels of the Wishart entries and of the p-tensors
# ---------------------------------------------------------------------------

def wishart_kernel(ambient, i, j):
    """``(2 sqrt(d))^{-1} sum_k (e_{ik} x e_{jk} + e_{jk} x e_{ik})``."""
    d = ambient.d
    k = np.arange(1, d + 1)
    rows = np.vstack([np.column_stack([np.full(d, i), np.full(d, j)]),
                      np.column_stack([np.full(d, j), np.full(d, i)])])
    cols = np.vstack([np.column_stack([k, k])] * 2)
    return Kernel(ambient, rows, cols, np.full(2 * d, 0.5 / math.sqrt(d)))


def tensor_kernel(ambient, j):
    """``d^{-1/2} sum_k sym(e_{j_1 k} x ... x e_{j_p k})``."""
    d = ambient.d
    p = len(j)
    k = np.arange(1, d + 1)
    base = Kernel(ambient, np.tile(np.asarray(j, dtype=np.int64), (d, 1)),
                  np.repeat(k[:, None], p, axis=1), np.full(d, 1.0 / math.sqrt(d)))
    return symmetrize(base)


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CovMatrix:
    """Covariance matrix with the index tuple labelling each row."""

    entries: np.ndarray
    index: tuple

    @property
    def dim(self):
        return len(self.index)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)


def _perm_array(p):
    return np.array(list(itertools.permutations(range(p))), dtype=np.int64)


def wishart_cov_exact(n, d, r, s):
    """Covariance of the half-vectorised normalised Wishart matrix.

    Entry ``((i, j), (u, v)) = [r(i-u) r(v-j) + r(i-v) r(u-j)] * sum_{k,l} s(k-l)^2 / d``.
    """
    idx = np.array(half_index(n), dtype=np.int64)
    i, j = idx[:, 0][:, None], idx[:, 1][:, None]
    u, v = idx[:, 0][None, :], idx[:, 1][None, :]
    rr = r(i - u) * r(v - j) + r(i - v) * r(u - j)
    C = np.asarray(rr, dtype=float) * (lag_sum(s, d, lambda x: x * x) / d)
    return CovMatrix((C + C.T) / 2.0, tuple(map(tuple, idx.tolist())))


def tensor_cov_exact(n, d, p, r, s):
    """Covariance of the increasing-index ``p``-tensor vector.

    Entry ``(j, j') = sum_{k,l} s(k-l)^p / d * perm[r(j_a - j'_b)]``; the double
    permutation sum over ``S(p) x S(p)`` collapses to ``p!`` times a permanent.
    """
    if p > n:
        raise ValueError(f"p={p} exceeds n={n}")
    if p > MAX_EXACT_ORDER:
        raise ResourceBudgetError(f"p={p} exceeds the exact-order limit {MAX_EXACT_ORDER}")
    tuples = np.array(increasing_tuples(n, p), dtype=np.int64)
    perms = _perm_array(p)
    J = tuples.shape[0]
    C = np.empty((J, J))
    # rows in chunks keep the (rows, J, p!, p) work array bounded
    step = max(1, (1 << 22) // max(1, J * len(perms) * p))
    sp = lag_sum(s, d, lambda x: x ** p)
    for start in range(0, J, step):
        a = tuples[start:start + step]
        lags = a[:, None, None, :] - tuples[None, :, perms].reshape(1, J, len(perms), p)
        C[start:start + step] = np.prod(r(lags), axis=-1).sum(axis=-1)
    C *= sp / d
    return CovMatrix((C + C.T) / 2.0, tuple(map(tuple, tuples.tolist())))


def s_quad_sum(s, d, p, q, absolute=False):
    """``d^{-2} sum_{k,k',l,l'} s(k-l)^q s(k'-l')^q s(k-k')^{p-q} s(l-l')^{p-q}``."""
    S = toeplitz_values(s, d)
    if absolute:
        S = np.abs(S)
    return _kernels.quad_sum(S ** q, S ** (p - q)) / d**2


def r_perm_sum(r, j, jp, q):
    """``(p!)^{-4}`` times the four-fold permutation sum of r-products."""
    j = np.asarray(j, dtype=np.int64)
    jp = np.asarray(jp, dtype=np.int64)
    p = j.shape[0]
    perms = _perm_array(p)
    P = len(perms)
    A = r(np.subtract.outer(j, jp))   # A[a, b] = r(j_a - j'_b)
    B = r(np.subtract.outer(j, j))
    Bp = r(np.subtract.outer(jp, jp))
    s_, t_ = perms[:, None, :], perms[None, :, :]
    # cross[sigma, tau] = prod_{m<q} A[sigma(m), tau(m)]
    cross = np.prod(A[s_[..., :q], t_[..., :q]], axis=-1)
    # same_j[sigma, sigma'] = prod_{m>=q} B[sigma(m), sigma'(m)], likewise for j'
    same_j = np.prod(B[s_[..., q:], t_[..., q:]], axis=-1)
    same_jp = np.prod(Bp[s_[..., q:], t_[..., q:]], axis=-1)
    # sum_{s,s',t,t'} cross[s,t] cross[s',t'] same_j[s,s'] same_jp[t,t']
    total = np.einsum("ab,cd,ac,bd->", cross, cross, same_j, same_jp)
    return float(total) / P**4


def contraction_norm_sq_exact(n, d, p, q, j, jp, r, s, budget=DEFAULT_BUDGET):
    """``||f_j (x)_q f_j'||^2`` from the separable quadruple-sum formula."""
    if not 1 <= q <= p - 1:
        raise ValueError(f"need 1 <= q <= p-1, got q={q}, p={p}")
    if len(j) != p or len(jp) != p:
        raise ValueError("index tuples must have length p")
    if max(max(j), max(jp)) > n or min(min(j), min(jp)) < 1:
        raise ValueError("row index out of range")
    work = float(d) ** 4 * float(math.factorial(p)) ** 4
    if work > budget:
        raise ResourceBudgetError(f"d^4 (p!)^4 = {work:.3e} exceeds budget {budget:.3e}")
    return s_quad_sum(s, d, p, q) * r_perm_sum(r, j, jp, q)


def variance_weights(p, factorial_mode=True):
    """Weights ``p^2 (j-1)!^2 C(p-1, j-1)^4 w_j`` for ``j = 1..p-1``.

    ``w_j = (2p - 2j)!`` in factorial mode, ``2p - 2j`` otherwise.
    """
    out = []
    for j in range(1, p):
        w = math.factorial(2 * p - 2 * j) if factorial_mode else 2 * p - 2 * j
        out.append(p * p * math.factorial(j - 1) ** 2 * math.comb(p - 1, j - 1) ** 4 * w)
    return out


def variance_formula(p, f, g, factorial_mode=True):
    """Variance of ``p^{-1} <D I_p(f), D I_p(g)>`` from symmetrised contraction norms."""
    if f.order != p or g.order != p:
        raise ValueError(f"kernels must have order p={p}")
    weights = variance_weights(p, factorial_mode)
    return float(sum(w * norm_sq(symmetrize(contract(f, g, j)))
                     for j, w in zip(range(1, p), weights)))
