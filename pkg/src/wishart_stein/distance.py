"""Monte-Carlo lower estimates of the Wasserstein distance to the Gaussian law.

The estimator is the sliced 1-Wasserstein distance: each projection onto a
unit direction is 1-Lipschitz, so every per-direction 1-D distance, and hence
their average, is a lower bound on the full distance.  The Gaussian
comparator is drawn from the exact covariance.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .bounds import matrix_bound, tensor_bound
from .errors import BoundVacuousError
from .exact import tensor_cov_exact, wishart_cov_exact
from .rng import DEFAULT_SEED, generator
from .sampler import (
    EnsembleSpec,
    half_index,
    sample_gaussian_vector,
    tensor_replicates,
    wishart_replicates,
)

DEFAULT_PROJECTIONS = 256

SWEEP_COLUMNS = ("n", "d", "p", "m", "q", "estimate", "stderr",
                 "rhs_theorem", "rhs_sharper", "seed")


def sliced_w1(A, B, n_proj=DEFAULT_PROJECTIONS, seed=0):
    """Sliced 1-Wasserstein distance between two equal-size sample sets.

    Returns ``(estimate, stderr)`` with the standard error taken across
    projections.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    if B.ndim == 1:
        B = B[:, None]
    if A.shape[1] != B.shape[1]:
        raise ValueError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    if A.shape[0] != B.shape[0]:
        raise ValueError(f"sample sizes differ: {A.shape[0]} vs {B.shape[0]}")
    if A.shape[0] < 2:
        raise ValueError("need at least 2 samples")
    if n_proj < 1:
        raise ValueError("n_proj must be >= 1")
    U = generator(seed, 7).standard_normal((n_proj, A.shape[1]))
    U /= np.linalg.norm(U, axis=1, keepdims=True)
    pa = np.sort(A @ U.T, axis=0)
    pb = np.sort(B @ U.T, axis=0)
    per = np.mean(np.abs(pa - pb), axis=0)
    est = float(np.mean(per))
    se = float(np.std(per, ddof=1) / math.sqrt(n_proj)) if n_proj > 1 else 0.0
    return est, se


@dataclass
class SweepRecord:
    n: int
    d: int
    p: int
    m: int
    q: int
    estimate: float
    stderr: float
    rhs_theorem: float
    rhs_sharper: float
    seed: int
    metric: str = "half-vector Euclidean"
    half_factor: float = math.sqrt(2.0)

    def row(self):
        return [getattr(self, c) for c in SWEEP_COLUMNS]

    def to_dict(self):
        return asdict(self)


def mc_wishart_distance(spec, m, n_proj=DEFAULT_PROJECTIONS, seed=None, workers=1,
                        strict_upper=False):
    """Sliced W1 between half-vectorised Wishart draws and their Gaussian twin.

    ``strict_upper`` keeps only the entries ``i < j`` (the ``p = 2`` tensor).
    """
    seed = spec.seed if seed is None else seed
    report = matrix_bound(spec.n, spec.d, spec.r, spec.s)
    W = wishart_replicates(spec, m, seed=seed, workers=workers)
    C = wishart_cov_exact(spec.n, spec.d, spec.r, spec.s).entries
    if strict_upper:
        keep = upper_pairs_mask(spec.n)
        W, C = W[:, keep], C[np.ix_(keep, keep)]
    G = sample_gaussian_vector(C, seed=seed, size=m, workers=workers)
    est, se = sliced_w1(W, G, n_proj, seed)
    return SweepRecord(spec.n, spec.d, 2, m, n_proj, est, se,
                       report.rhs_theorem, report.rhs_sharper, int(seed))


def mc_tensor_distance(spec, p, m, n_proj=DEFAULT_PROJECTIONS, seed=None, workers=1,
                       c_p=1.0):
    """Sliced W1 for the increasing-index ``p``-tensor vector.

    The bound columns carry ``tensor_bound`` with the given ``c_p`` (NaN when
    the bound is vacuous); they are for the record, not a certified cap.
    """
    seed = spec.seed if seed is None else seed
    try:
        rep = tensor_bound(spec.n, spec.d, p, spec.r, spec.s, c_p)
        rhs_t, rhs_s = rep.rhs_theorem, rep.rhs_sharper
    except BoundVacuousError:
        rhs_t = rhs_s = math.nan
    Y = tensor_replicates(spec, p, m, seed=seed, workers=workers)
    C = tensor_cov_exact(spec.n, spec.d, p, spec.r, spec.s).entries
    G = sample_gaussian_vector(C, seed=seed, size=m, workers=workers)
    est, se = sliced_w1(Y, G, n_proj, seed)
    return SweepRecord(spec.n, spec.d, p, m, n_proj, est, se, rhs_t, rhs_s, int(seed))


def slope_fit(points):
    """Least squares of ``log y`` on ``log x``: ``(slope, intercept, r_squared)``."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 3:
        raise ValueError("slope_fit needs at least 3 (x, y) points")
    if np.any(pts <= 0) or not np.all(np.isfinite(pts)):
        raise ValueError("slope_fit needs finite positive x and y")
    lx, ly = np.log(pts[:, 0]), np.log(pts[:, 1])
    A = np.column_stack([lx, np.ones_like(lx)])
    (slope, intercept), *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2


def run_sweep(n_values, d_values, r, s, p=2, m=2000, n_proj=DEFAULT_PROJECTIONS,
              seed=None, workers=1, monte_carlo=True, c_p=1.0):
    """One :class:`SweepRecord` per ``(n, d)``; estimates are NaN when ``monte_carlo`` is off."""
    seed = DEFAULT_SEED if seed is None else seed
    records = []
    for n in n_values:
        for d in d_values:
            spec = EnsembleSpec(n, d, r, s, seed)
            if monte_carlo:
                if p == 2:
                    rec = mc_wishart_distance(spec, m, n_proj, seed, workers)
                else:
                    rec = mc_tensor_distance(spec, p, m, n_proj, seed, workers, c_p)
            else:
                if p == 2:
                    rep = matrix_bound(n, d, r, s)
                else:
                    rep = tensor_bound(n, d, p, r, s, c_p)
                rec = SweepRecord(n, d, p, 0, 0, math.nan, math.nan,
                                  rep.rhs_theorem, rep.rhs_sharper, int(seed))
            records.append(rec)
    return records


def upper_pairs_mask(n):
    """Mask selecting strictly upper pairs ``i < j`` inside a half-vector."""
    return np.array([i < j for i, j in half_index(n)])

