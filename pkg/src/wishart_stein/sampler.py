"""Sampling the correlated Gaussian matrix and the statistics built from it.

``X = L_R Z L_S^T`` with ``Z`` standard normal gives
``Cov(X[i, j], X[i', j']) = r(i - i') s(j - j')``.  Index tuples handed to the
public functions are 1-based, as row labels.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from . import _kernels
from .covariance import CovarianceFunction, ToeplitzFactor, psd_factor, toeplitz_values
from .rng import DEFAULT_SEED, generator, map_blocks

MAX_WICK_ORDER = 6


@dataclass(frozen=True)
class EnsembleSpec:
    n: int
    d: int
    r: CovarianceFunction
    s: CovarianceFunction
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        if self.n < 1 or self.d < 1:
            raise ValueError(f"need n >= 1 and d >= 1, got n={self.n}, d={self.d}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    @cached_property
    def row_factor(self):
        return ToeplitzFactor(self.r, self.n)

    @cached_property
    def col_factor(self):
        return ToeplitzFactor(self.s, self.d)

    @cached_property
    def row_gram(self):
        return toeplitz_values(self.r, self.n)

    def validate(self):
        """Factor both Gram matrices; raises NotPSDError on failure."""
        self.row_factor
        self.col_factor
        return self

    def draw(self, rng, count):
        """``count`` independent copies of the ``n x d`` matrix."""
        Z = rng.standard_normal((count, self.n, self.d))
        return self.row_factor.left(self.col_factor.right(Z))


def sample_matrix(spec, rng=None):
    """One draw of the ``n x d`` matrix; deterministic in ``spec.seed``."""
    if rng is None:
        rng = generator(spec.seed, 0, 0)
    return spec.draw(rng, 1)[0]


def wishart(X, r, d=None):
    """Centred, scaled Wishart matrix ``(X X^T - d R) / sqrt(d)``.

    Works on a single ``(n, d)`` matrix or a stack ``(..., n, d)``.
    """
    X = np.asarray(X, dtype=float)
    n, dd = X.shape[-2:]
    if d is not None and d != dd:
        raise ValueError(f"X has {dd} columns but d={d}")
    W = X @ np.swapaxes(X, -1, -2)
    W -= dd * toeplitz_values(r, n)
    W /= math.sqrt(dd)
    # exact symmetry regardless of BLAS rounding
    return (W + np.swapaxes(W, -1, -2)) / 2.0


def half_index(n):
    """Pairs ``(i, j)``, ``1 <= i <= j <= n``, in row-major upper order."""
    iu = np.triu_indices(n)
    return [(int(a) + 1, int(b) + 1) for a, b in zip(*iu)]


def half_vectorize(M, rtol=1e-12):
    M = np.asarray(M, dtype=float)
    n = M.shape[-1]
    if M.shape[-2] != n:
        raise ValueError("half_vectorize needs square matrices")
    asym = np.max(np.abs(M - np.swapaxes(M, -1, -2))) if M.size else 0.0
    if asym > rtol * max(1.0, float(np.max(np.abs(M)))):
        raise ValueError(f"matrix is not symmetric (max asymmetry {asym:.3e})")
    iu = np.triu_indices(n)
    return M[..., iu[0], iu[1]]


# ---------------------------------------------------------------------------
# Wick products
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def pairings(p):
    """All partial pairings of ``range(p)`` as ``(pairs, unpaired)``."""
    def rec(items):
        if not items:
            yield (), ()
            return
        first, rest = items[0], items[1:]
        for pairs, free in rec(rest):
            yield pairs, (first,) + free
        for idx, other in enumerate(rest):
            remaining = rest[:idx] + rest[idx + 1:]
            for pairs, free in rec(remaining):
                yield ((first, other),) + pairs, free
    return tuple(rec(tuple(range(p))))


def wick_product(x, c, max_order=MAX_WICK_ORDER):
    """Wick product ``:x_1 ... x_p:`` for jointly Gaussian values with covariance ``c``.

    Signed sum over partial pairings: paired factors are replaced by
    ``-c[a, b]``, unpaired ones keep ``x[m]``.
    """
    x = np.asarray(x, dtype=float)
    p = x.shape[0]
    if p > max_order:
        raise ValueError(f"Wick order {p} exceeds the configured maximum {max_order}")
    c = np.asarray(c, dtype=float).reshape(p, p)
    total = 0.0
    for pairs, free in pairings(p):
        term = (-1.0) ** len(pairs)
        for a, b in pairs:
            term *= c[a, b]
        for m in free:
            term *= x[m]
        total += term
    return total


def _wick_tables(tuples, r):
    """Pairing coefficients for each row tuple; covariance inside a column is r."""
    T = np.asarray(tuples, dtype=np.int64).reshape(len(tuples), -1)
    p = T.shape[1]
    if p > MAX_WICK_ORDER:
        raise ValueError(f"Wick order {p} exceeds the configured maximum {MAX_WICK_ORDER}")
    pl = pairings(p)
    coef = np.ones((T.shape[0], len(pl)))
    U = np.zeros((len(pl), max(p, 1)), dtype=np.int64)
    ucount = np.zeros(len(pl), dtype=np.int64)
    for P, (pairs, free) in enumerate(pl):
        coef[:, P] = (-1.0) ** len(pairs)
        for a, b in pairs:
            coef[:, P] *= r(T[:, a] - T[:, b])
        U[P, : len(free)] = free
        ucount[P] = len(free)
    return T - 1, coef, U, ucount


def wick_columns(X, tuples, r):
    """Per-column Wick products ``(B, J, d)`` for a stack ``X`` of shape ``(B, n, d)``."""
    T0, coef, U, ucount = _wick_tables(tuples, r)
    return _kernels.wick_columns(np.asarray(X, dtype=float), T0, coef, U, ucount)


# ---------------------------------------------------------------------------
# p-tensors
# ---------------------------------------------------------------------------

def increasing_tuples(n, p):
    return [tuple(j + 1 for j in c) for c in itertools.combinations(range(n), p)]


@dataclass(frozen=True)
class TensorSample:
    index: tuple
    values: np.ndarray

    def __getitem__(self, j):
        return float(self.values[self.index.index(tuple(j))])

    def as_dict(self):
        return {j: float(v) for j, v in zip(self.index, self.values)}

    def __len__(self):
        return len(self.index)


def tensor_entries(X, tuples, r):
    """``d^{-1/2} sum_k Wick(X[j_1, k], ..., X[j_p, k])`` for each tuple; shape ``(B, J)``."""
    X = np.asarray(X, dtype=float)
    single = X.ndim == 2
    if single:
        X = X[None]
    out = wick_columns(X, tuples, r).sum(axis=-1) / math.sqrt(X.shape[-1])
    return out[0] if single else out


def tensor_sample(spec, p, X=None):
    if p > spec.n:
        raise ValueError(f"tensor order p={p} exceeds n={spec.n}")
    if p < 1:
        raise ValueError("p must be >= 1")
    if X is None:
        X = sample_matrix(spec)
    tuples = increasing_tuples(spec.n, p)
    return TensorSample(tuple(tuples), tensor_entries(X, tuples, spec.r))


# ---------------------------------------------------------------------------
# Monte-Carlo replicate streams
# ---------------------------------------------------------------------------

def _draw_footprint(spec):
    # block layout depends on the matrix shape only, so every replicate
    # stream of a spec sees the same matrix draws
    return 4 * spec.n * spec.d


def wishart_replicates(spec, m, seed=None, workers=1):
    """``m`` half-vectorised Wishart draws, shape ``(m, n(n+1)/2)``."""
    seed = spec.seed if seed is None else seed
    spec.validate()

    def block(rng, count):
        return half_vectorize(wishart(spec.draw(rng, count), spec.r))

    out = map_blocks(block, m, _draw_footprint(spec), seed, tag=1, workers=workers)
    return np.empty((0, spec.n * (spec.n + 1) // 2)) if out is None else out


def tensor_replicates(spec, p, m, seed=None, workers=1):
    """``m`` draws of the increasing-index tensor vector, shape ``(m, C(n, p))``."""
    if p > spec.n:
        raise ValueError(f"tensor order p={p} exceeds n={spec.n}")
    seed = spec.seed if seed is None else seed
    spec.validate()
    tuples = increasing_tuples(spec.n, p)

    def block(rng, count):
        return tensor_entries(spec.draw(rng, count), tuples, spec.r)

    # same tag and block layout as wishart_replicates: identical matrix draws
    out = map_blocks(block, m, _draw_footprint(spec), seed, tag=1,
                     workers=workers)
    return np.empty((0, len(tuples))) if out is None else out


# ---------------------------------------------------------------------------
# Malliavin inner products
# ---------------------------------------------------------------------------

def malliavin_batch(X, j, jp, r, s):
    """``p^{-1} <D F_j, D F_j'>`` on each matrix of the stack ``X``.

    ``F_j = d^{-1/2} sum_k Wick(X[j_1,k], ..., X[j_p,k])``.  By the Leibniz
    rule, ``D F_j = d^{-1/2} sum_{k,m} Wick(row tuple without m)_k e_{j_m k}``,
    and inner products of basis vectors follow the product Gram.
    """
    X = np.asarray(X, dtype=float)
    single = X.ndim == 2
    if single:
        X = X[None]
    j, jp = tuple(j), tuple(jp)
    p = len(j)
    if len(jp) != p:
        raise ValueError("both index tuples must have the same order")
    d = X.shape[-1]
    drop = lambda t: [t[:m] + t[m + 1:] for m in range(p)]
    if p == 1:
        Wa = np.ones((X.shape[0], 1, d))
        Wb = Wa
    else:
        Wa = wick_columns(X, drop(j), r)
        Wb = wick_columns(X, drop(jp), r)
    Rjj = np.asarray(r(np.subtract.outer(np.asarray(j), np.asarray(jp))), dtype=float).reshape(p, p)
    if s.kind == "delta":
        A = np.einsum("bmk,bnk->bmn", Wa, Wb)
    else:
        S = toeplitz_values(s, d)
        A = np.einsum("bmk,kl,bnl->bmn", Wa, S, Wb, optimize=True)
    out = np.einsum("mn,bmn->b", Rjj, A) / (p * d)
    return float(out[0]) if single else out


def malliavin_inner(spec, p, j, jp, X):
    if len(j) != p or len(jp) != p:
        raise ValueError(f"index tuples must have length p={p}")
    return malliavin_batch(X, j, jp, spec.r, spec.s)


def malliavin_replicates(spec, j, jp, m, seed=None, workers=1):
    """Columns ``(V, F_j, F_j')`` over ``m`` replicates, shape ``(m, 3)``."""
    seed = spec.seed if seed is None else seed
    spec.validate()
    j, jp = tuple(j), tuple(jp)

    def block(rng, count):
        X = spec.draw(rng, count)
        V = malliavin_batch(X, j, jp, spec.r, spec.s)
        F = tensor_entries(X, [j, jp], spec.r)
        return np.column_stack([V, F[:, 0], F[:, 1]])

    return map_blocks(block, m, _draw_footprint(spec), seed, tag=1,
                      workers=workers)


# ---------------------------------------------------------------------------
# Gaussian comparators
# ---------------------------------------------------------------------------

def sample_gaussian_vector(C, seed=DEFAULT_SEED, size=None, workers=1):
    """Centred Gaussian draws with covariance ``C``.

    ``size=None`` returns one vector; otherwise an array ``(size, dim)``.
    """
    F = psd_factor(C)
    dim = F.shape[0]

    def block(rng, count):
        return rng.standard_normal((count, dim)) @ F.T

    if size is None:
        return block(generator(seed, 4, 0), 1)[0]
    out = map_blocks(block, size, dim, seed, tag=4, workers=workers)
    return np.empty((0, dim)) if out is None else out
