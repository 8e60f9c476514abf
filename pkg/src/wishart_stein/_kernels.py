"""Hot numeric kernels, each in a numba flavour and a pure-numpy flavour.

The public name (e.g. ``gram_bilinear``) is bound to the numba version unless
``WISHART_STEIN_DISABLE_NUMBA`` is set.  ``*_numpy`` and ``*_numba`` stay
importable for cross-checks and the benchmark script.

All index arrays are 0-based here.
"""

import numpy as np

from ._accel import NUMBA_ENABLED, njit

# numpy fallback works on blocks of at most this many pairwise entries
_CHUNK = 1 << 21


# ---------------------------------------------------------------------------
# Bilinear form of two sparse elementary-tensor expansions under the
# product Gram  <e_{ik}, e_{i'k'}> = R[i, i'] * S[k, k'].
# ---------------------------------------------------------------------------

def gram_bilinear_numpy(rows_a, cols_a, w_a, rows_b, cols_b, w_b, R, S):
    ta, p = rows_a.shape
    tb = rows_b.shape[0]
    if ta == 0 or tb == 0:
        return 0.0
    step = max(1, _CHUNK // max(tb, 1))
    total = 0.0
    for start in range(0, ta, step):
        stop = min(ta, start + step)
        g = np.ones((stop - start, tb))
        for m in range(p):
            g *= R[rows_a[start:stop, m][:, None], rows_b[None, :, m]]
            g *= S[cols_a[start:stop, m][:, None], cols_b[None, :, m]]
        total += float(w_a[start:stop] @ g @ w_b)
    return total


@njit(cache=True)
def _gram_bilinear_loops(rows_a, cols_a, w_a, rows_b, cols_b, w_b, R, S):
    ta, p = rows_a.shape
    tb = rows_b.shape[0]
    total = 0.0
    for a in range(ta):
        acc = 0.0
        for b in range(tb):
            g = w_b[b]
            for m in range(p):
                g *= R[rows_a[a, m], rows_b[b, m]] * S[cols_a[a, m], cols_b[b, m]]
                if g == 0.0:
                    break
            acc += g
        total += w_a[a] * acc
    return total


def gram_bilinear_numba(rows_a, cols_a, w_a, rows_b, cols_b, w_b, R, S):
    return float(_gram_bilinear_loops(rows_a, cols_a, w_a, rows_b, cols_b, w_b, R, S))


# ---------------------------------------------------------------------------
# Quadruple sum  sum_{k,k',l,l'} A[k,l] A[k',l'] B[k,k'] B[l,l']
# ---------------------------------------------------------------------------

def quad_sum_numpy(A, B):
    # = sum_{k,k'} B[k,k'] (A B A^T)[k,k']
    return float(np.sum((A @ B @ A.T) * B))


@njit(cache=True)
def _quad_sum_loops(A, B):
    d = A.shape[0]
    total = 0.0
    row = np.empty(d)
    for kp in range(d):
        # row[l] = (B A^T)[l, kp]
        for l in range(d):
            acc = 0.0
            for lp in range(d):
                acc += A[kp, lp] * B[l, lp]
            row[l] = acc
        for k in range(d):
            bkk = B[k, kp]
            if bkk == 0.0:
                continue
            inner = 0.0
            for l in range(d):
                inner += A[k, l] * row[l]
            total += bkk * inner
    return total


def quad_sum_numba(A, B):
    return float(_quad_sum_loops(np.ascontiguousarray(A, dtype=np.float64),
                                 np.ascontiguousarray(B, dtype=np.float64)))


# ---------------------------------------------------------------------------
# Per-column Wick products for many row tuples over a batch of samples.
#   out[b, j, k] = sum_P coef[j, P] * prod_{t < ucount[P]} X[b, T[j, U[P, t]], k]
# ---------------------------------------------------------------------------

def wick_columns_numpy(X, T, coef, U, ucount):
    B, _, d = X.shape
    J = T.shape[0]
    out = np.zeros((B, J, d))
    for P in range(U.shape[0]):
        term = np.ones((B, J, d))
        for t in range(ucount[P]):
            term *= X[:, T[:, U[P, t]], :]
        out += coef[None, :, P, None] * term
    return out


@njit(cache=True)
def _wick_columns_loops(X, T, coef, U, ucount, out):
    B, _, d = X.shape
    J = T.shape[0]
    npair = U.shape[0]
    for b in range(B):
        for j in range(J):
            for k in range(d):
                acc = 0.0
                for P in range(npair):
                    c = coef[j, P]
                    if c == 0.0:
                        continue
                    term = c
                    for t in range(ucount[P]):
                        term *= X[b, T[j, U[P, t]], k]
                    acc += term
                out[b, j, k] = acc
    return out


def wick_columns_numba(X, T, coef, U, ucount):
    X = np.ascontiguousarray(X, dtype=np.float64)
    out = np.empty((X.shape[0], T.shape[0], X.shape[2]))
    return _wick_columns_loops(X, np.ascontiguousarray(T, dtype=np.int64),
                               np.ascontiguousarray(coef, dtype=np.float64),
                               np.ascontiguousarray(U, dtype=np.int64),
                               np.ascontiguousarray(ucount, dtype=np.int64), out)


# two BLAS matrix products beat the compiled loops (see the benchmark),
# so quad_sum stays on numpy under both settings
quad_sum = quad_sum_numpy

if NUMBA_ENABLED:
    gram_bilinear = gram_bilinear_numba
    wick_columns = wick_columns_numba
else:
    gram_bilinear = gram_bilinear_numpy
    wick_columns = wick_columns_numpy
