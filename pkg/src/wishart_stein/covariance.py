"""Stationary covariance sequences for rows (r) and columns (s).

A :class:`CovarianceFunction` is an even sequence on the integers with value 1
at lag 0.  Three families are supported: the Kronecker delta (independent
entries), the stretched exponential ``exp(-lam * |k|**alpha)`` with
``1 <= alpha <= 2``, and a finite lag table.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import DivergenceError, NotPSDError

SQRT6_OVER_2 = math.sqrt(6.0) / 2.0

DEFAULT_TAIL_TOL = 1e-12
DEFAULT_MAX_LAG = 10**6
MAX_JITTER = 1e-10
# exponential lags whose value falls below this are dropped from banded factors
BAND_TOL = 1e-17


@dataclass(frozen=True)
class CovarianceFunction:
    kind: str
    lam: float = 0.0
    alpha: float = 1.0
    values: tuple = field(default=())

    def __post_init__(self):
        if self.kind == "delta":
            return
        if self.kind == "exponential":
            if not self.lam > 0:
                raise ValueError(f"exponential covariance needs lam > 0, got {self.lam}")
            if not 1.0 <= self.alpha <= 2.0:
                raise ValueError(f"exponential covariance needs 1 <= alpha <= 2, got {self.alpha}")
            return
        if self.kind == "table":
            vals = tuple(float(v) for v in self.values)
            if not vals:
                raise ValueError("table covariance needs at least the lag-0 value")
            if vals[0] != 1.0:
                raise ValueError(f"table covariance must have value exactly 1 at lag 0, got {vals[0]!r}")
            bad = [v for v in vals if not (math.isfinite(v) and abs(v) <= 1.0)]
            if bad:
                raise ValueError(f"table covariance values must lie in [-1, 1], got {bad}")
            # strip trailing zeros so equal sequences compare equal
            while len(vals) > 1 and vals[-1] == 0.0:
                vals = vals[:-1]
            object.__setattr__(self, "values", vals)
            return
        raise ValueError(f"unknown covariance kind {self.kind!r}")

    # constructors -------------------------------------------------------
    @classmethod
    def delta(cls):
        return cls("delta")

    @classmethod
    def exponential(cls, lam, alpha=1.0):
        return cls("exponential", lam=float(lam), alpha=float(alpha))

    @classmethod
    def table(cls, values):
        return cls("table", values=tuple(values))

    # evaluation ---------------------------------------------------------
    def __call__(self, k):
        k = np.abs(np.asarray(k))
        if self.kind == "delta":
            out = (k == 0).astype(float)
        elif self.kind == "exponential":
            out = np.exp(-self.lam * k.astype(float) ** self.alpha)
        else:
            vals = np.asarray(self.values)
            out = np.where(k < len(vals), vals[np.minimum(k, len(vals) - 1)], 0.0)
        return float(out) if out.ndim == 0 else out

    @property
    def support(self):
        """Largest lag with a nonzero value, or ``None`` when unbounded."""
        if self.kind == "delta":
            return 0
        if self.kind == "table":
            return len(self.values) - 1
        return None

    def effective_support(self, tol=BAND_TOL):
        """Largest lag with ``|value| >= tol``; finite for every family."""
        if self.kind != "exponential":
            return self.support
        return max(0, int(math.floor((-math.log(tol) / self.lam) ** (1.0 / self.alpha))))

    def spec_string(self):
        if self.kind == "delta":
            return "delta"
        if self.kind == "exponential":
            return f"exp:{self.lam!r},{self.alpha!r}"
        return "table:" + ",".join(repr(v) for v in self.values)

    def __str__(self):
        return self.spec_string()


def parse_covariance(text):
    """Parse a covariance description.

    Accepted forms::

        delta
        exp:3            exp:3,1.5         exponential:lambda=3,alpha=1
        table:1,0.2,-0.1
    """
    text = text.strip()
    low = text.lower()
    if low in {"delta", "kronecker", "kronecker-delta", "independent", "iid"}:
        return CovarianceFunction.delta()
    if ":" not in text:
        raise ValueError(f"cannot parse covariance spec {text!r}")
    kind, _, rest = text.partition(":")
    kind = kind.strip().lower()
    parts = [p.strip() for p in rest.split(",") if p.strip()]
    if kind in {"table", "finite-table"}:
        return CovarianceFunction.table([float(p) for p in parts])
    if kind in {"exp", "exponential"}:
        params = {}
        positional = []
        for p in parts:
            if "=" in p:
                key, _, val = p.partition("=")
                params[key.strip().lower()] = float(val)
            else:
                positional.append(float(p))
        lam = params.get("lambda", params.get("lam", positional[0] if positional else None))
        alpha = params.get("alpha", positional[1] if len(positional) > 1 else 1.0)
        if lam is None:
            raise ValueError(f"exponential covariance spec {text!r} is missing lambda")
        return CovarianceFunction.exponential(lam, alpha)
    raise ValueError(f"unknown covariance kind in {text!r}")


# ---------------------------------------------------------------------------
# norms and lag sums
# ---------------------------------------------------------------------------

def _exp_tail_bound(lam, alpha, K):
    # k**alpha >= k * K**(alpha-1) for k > K >= 1, so the tail is dominated
    # by a geometric series with ratio exp(-lam * K**(alpha-1))
    mu = lam * max(K, 1) ** (alpha - 1.0)
    return 2.0 * math.exp(-mu * (K + 1)) / (-math.expm1(-mu))


def l1_norm_with_error(f, tail_tol=DEFAULT_TAIL_TOL, max_lag=DEFAULT_MAX_LAG):
    """Return ``(sum_k |f(k)|, bound on the neglected tail)``."""
    if tail_tol <= 0:
        raise ValueError("tail_tol must be positive")
    if f.kind == "delta":
        return 1.0, 0.0
    if f.kind == "table":
        return 1.0 + 2.0 * float(np.sum(np.abs(f.values[1:]))), 0.0
    K = 16
    while True:
        tail = _exp_tail_bound(f.lam, f.alpha, K)
        if tail < tail_tol:
            break
        if K >= max_lag:
            raise DivergenceError(
                f"l1 tail bound {tail:.3e} still above {tail_tol:.1e} at lag {max_lag}")
        K = min(2 * K, max_lag)
    lags = np.arange(K, 0, -1, dtype=float)  # small terms first
    return 1.0 + 2.0 * float(np.sum(np.exp(-f.lam * lags ** f.alpha))), tail


def l1_norm(f, tail_tol=DEFAULT_TAIL_TOL, max_lag=DEFAULT_MAX_LAG):
    return l1_norm_with_error(f, tail_tol, max_lag)[0]


def lag_sum(f, d, g=lambda v: v):
    """``sum_{k,l=1..d} g(f(k-l))`` by lag counting."""
    if d < 1:
        raise ValueError("d must be >= 1")
    top = d - 1
    if f.support is not None:
        top = min(top, f.support)
    m = np.arange(top, 0, -1)
    off = float(np.sum((d - m) * g(np.asarray(f(m), dtype=float)))) if top > 0 else 0.0
    return d * float(g(np.array(1.0))) + 2.0 * off


def l43_window(s, d):
    """``sum_{|k| <= d} |s(k)|**(4/3)``."""
    top = d if s.support is None else min(d, s.support)
    m = np.arange(top, 0, -1)
    return 1.0 + 2.0 * float(np.sum(np.abs(s(m)) ** (4.0 / 3.0))) if top > 0 else 1.0


@dataclass(frozen=True)
class NormReport:
    l1: float
    l43_window: float
    s2_sum: float
    sp_sum: float
    truncation_error_bound: float


def s_sums(s, d, p=2):
    """Norms and double sums of ``s`` needed by the bounds, for window ``d``."""
    if p < 2:
        raise ValueError("p must be >= 2")
    l1, err = l1_norm_with_error(s)
    return NormReport(
        l1=l1,
        l43_window=l43_window(s, d),
        s2_sum=lag_sum(s, d, lambda v: v * v),
        sp_sum=lag_sum(s, d, lambda v: v ** p),
        truncation_error_bound=err,
    )


# ---------------------------------------------------------------------------
# admissibility
# ---------------------------------------------------------------------------

def tensor_margin(l1, p):
    """``1 - (l1 - 1) * (p! l1**(p-1) + (p! - 1)/2)``."""
    fp = math.factorial(p)
    return 1.0 - (l1 - 1.0) * (fp * l1 ** (p - 1) + (fp - 1) / 2.0)


def admissible_matrix(r):
    """``(l1 < sqrt(6)/2, sqrt(6)/2 - l1)`` for the row covariance ``r``."""
    margin = SQRT6_OVER_2 - l1_norm(r)
    return margin > 0, margin


def admissible_tensor(r, p):
    if p < 2:
        raise ValueError("p must be >= 2")
    margin = tensor_margin(l1_norm(r), p)
    return margin > 0, margin


# ---------------------------------------------------------------------------
# Toeplitz Gram matrices and their factors
# ---------------------------------------------------------------------------

def toeplitz_values(f, m):
    """Dense ``m x m`` matrix with entries ``f(a - b)``; no PSD check."""
    return scipy.linalg.toeplitz(np.asarray(f(np.arange(m)), dtype=float).reshape(m))


def _not_psd(M):
    w, v = np.linalg.eigh(M)
    vec = v[:, 0]
    return NotPSDError(
        f"{M.shape[0]}x{M.shape[0]} Gram matrix is not positive semidefinite "
        f"(smallest eigenvalue {w[0]:.3e})", witness=vec, quad_form=float(vec @ M @ vec))


def _cholesky_jitter(M):
    scale = max(1.0, float(np.max(np.abs(np.diag(M))))) if M.size else 1.0
    for jitter in (0.0, 1e-14, 1e-12, MAX_JITTER):
        try:
            return np.linalg.cholesky(M + jitter * scale * np.eye(M.shape[0]))
        except np.linalg.LinAlgError:
            continue
    raise _not_psd(M)


def toeplitz_gram(f, m):
    """Gram matrix ``[f(a - b)]_{a,b}``, validated PSD by jittered Cholesky."""
    if m < 1:
        raise ValueError("m must be >= 1")
    M = toeplitz_values(f, m)
    if f.kind != "delta":
        _cholesky_jitter(M)
    return M


class ToeplitzFactor:
    """Lower-triangular ``L`` with ``L L^T = toeplitz_gram(f, m)``.

    Stored as the identity, a dense matrix, or a lower band, depending on
    the support of ``f`` relative to ``m``.
    """

    def __init__(self, f, m):
        self.m = m
        self.f = f
        support = f.effective_support()
        if support == 0:
            self.kind, self.data = "identity", None
        elif support < m // 4:
            self.kind = "banded"
            band = np.zeros((support + 1, m))
            vals = np.asarray(f(np.arange(support + 1)), dtype=float)
            for i in range(support + 1):
                band[i, : m - i] = vals[i]
            self.data = self._banded_cholesky(band)
        else:
            self.kind = "dense"
            self.data = _cholesky_jitter(toeplitz_values(f, m))

    def _banded_cholesky(self, band):
        for jitter in (0.0, 1e-14, 1e-12, MAX_JITTER):
            b = band.copy()
            b[0] += jitter
            try:
                return scipy.linalg.cholesky_banded(b, lower=True)
            except np.linalg.LinAlgError:
                continue
        w, v = scipy.linalg.eig_banded(band, lower=True, select="i", select_range=(0, 0))
        M = toeplitz_values(self.f, self.m) if self.m <= 4096 else None
        q = float(v[:, 0] @ M @ v[:, 0]) if M is not None else float(w[0])
        raise NotPSDError(
            f"{self.m}x{self.m} banded Gram matrix is not positive semidefinite "
            f"(smallest eigenvalue {w[0]:.3e})", witness=v[:, 0], quad_form=q)

    def dense(self):
        if self.kind == "identity":
            return np.eye(self.m)
        if self.kind == "dense":
            return self.data
        L = np.zeros((self.m, self.m))
        for i in range(self.data.shape[0]):
            idx = np.arange(self.m - i)
            L[idx + i, idx] = self.data[i, : self.m - i]
        return L

    def right(self, Z):
        """``Z @ L.T`` acting on the last axis of ``Z``."""
        if self.kind == "identity":
            return Z
        if self.kind == "dense":
            return Z @ self.data.T
        out = np.zeros_like(Z)
        m = self.m
        for i in range(self.data.shape[0]):
            out[..., i:] += self.data[i, : m - i] * Z[..., : m - i]
        return out

    def left(self, Z):
        """``L @ Z`` acting on the second-to-last axis of ``Z``."""
        return np.swapaxes(self.right(np.swapaxes(Z, -1, -2)), -1, -2)


def psd_factor(C, rel_tol=1e-10):
    """A matrix ``F`` with ``F F^T = C`` for a symmetric PSD ``C``.

    Cholesky when it succeeds, otherwise eigen-decomposition with eigenvalues
    in ``[-rel_tol * ||C||, 0)`` clipped to zero.
    """
    C = np.asarray(C, dtype=float)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise ValueError("covariance must be a square matrix")
    try:
        return np.linalg.cholesky(C)
    except np.linalg.LinAlgError:
        pass
    w, v = np.linalg.eigh((C + C.T) / 2.0)
    scale = max(float(np.max(np.abs(w))), 0.0) if w.size else 0.0
    if w.size and w[0] < -rel_tol * max(scale, 1e-300):
        raise NotPSDError(f"covariance has negative eigenvalue {w[0]:.3e}",
                          witness=v[:, 0], quad_form=float(w[0]))
    return v * np.sqrt(np.clip(w, 0.0, None))
