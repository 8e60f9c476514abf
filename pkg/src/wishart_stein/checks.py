"""Randomised inequality suite over admissible covariance tables.

Each check compares an exactly enumerated left-hand side against its
closed-form right-hand side with a small additive slack.  Checks whose
hypotheses fail for the drawn (or injected) covariance are reported as
SKIPPED rather than failed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import bounds
from .covariance import (
    SQRT6_OVER_2,
    CovarianceFunction,
    l1_norm,
    s_sums,
    tensor_margin,
)
from .exact import (
    Ambient,
    contract,
    contraction_norm_sq_exact,
    inner,
    norm_sq,
    tensor_cov_exact,
    tensor_kernel,
    wishart_cov_exact,
    wishart_kernel,
)
from .rng import generator
from .sampler import increasing_tuples

SLACK = 1e-12
EIG_RTOL = 1e-8


def _le(lhs, rhs, slack=SLACK):
    return lhs <= rhs + slack * max(1.0, abs(rhs))


# ---------------------------------------------------------------------------
# random admissible covariances
# ---------------------------------------------------------------------------

def ma_autocorrelation(coefs):
    """Normalised autocorrelation of a moving average; always positive semidefinite."""
    a = np.asarray(coefs, dtype=float)
    full = np.correlate(a, a, mode="full")[len(a) - 1:]
    return full / full[0]


def random_s_table(rng, max_lag=4):
    q = int(rng.integers(0, max_lag + 1))
    vals = ma_autocorrelation(rng.normal(size=q + 1))
    vals[0] = 1.0
    return CovarianceFunction.table(np.clip(vals, -1.0, 1.0))


def max_l1_tensor(p):
    """Largest ``||r||_1 <= sqrt(6)/2`` keeping the tensor margin positive (bisection)."""
    lo, hi = 1.0, SQRT6_OVER_2
    for _ in range(200):
        mid = (lo + hi) / 2.0
        if tensor_margin(mid, p) > 0:
            lo = mid
        else:
            hi = mid
    return lo


def random_r_table(rng, max_lag=4, l1_max=SQRT6_OVER_2):
    """``(1 - eps) delta + eps rho`` with ``rho`` an MA autocorrelation and ``||r||_1 < l1_max``."""
    q = int(rng.integers(1, max_lag + 1))
    rho = ma_autocorrelation(rng.normal(size=q + 1))
    excess = float(np.sum(np.abs(rho[1:]))) * 2.0
    target = 1.0 + rng.uniform(0.0, 0.999) * (l1_max - 1.0)
    eps = 1.0 if excess == 0.0 else min(1.0, (target - 1.0) / excess)
    vals = eps * rho
    vals[0] = 1.0
    r = CovarianceFunction.table(vals)
    if not l1_norm(r) < l1_max:
        return CovarianceFunction.delta()
    return r


# ---------------------------------------------------------------------------
# results
# ---------------------------------------------------------------------------

@dataclass
class CheckResult:
    name: str
    cases: int = 0
    violations: int = 0
    skipped: int = 0
    worst_slack: float = math.inf
    notes: list = field(default_factory=list)

    def record(self, lhs, rhs, slack=SLACK):
        self.cases += 1
        self.worst_slack = min(self.worst_slack, rhs - lhs)
        if not _le(lhs, rhs, slack):
            self.violations += 1
            if len(self.notes) < 5:
                self.notes.append(f"lhs={lhs:.17g} > rhs={rhs:.17g}")

    def skip(self):
        self.skipped += 1

    @property
    def status(self):
        if self.violations:
            return "FAIL"
        if self.cases == 0:
            return "SKIPPED"
        return "PASS"

    def line(self):
        return (f"{self.status:7s} {self.name:28s} cases={self.cases:5d} "
                f"violations={self.violations} skipped={self.skipped} "
                f"min_slack={self.worst_slack:.3e}")


CHECK_NAMES = (
    "lemma31_sum",
    "wishart_diag_supinf",
    "wishart_sdd_floor",
    "wishart_varah",
    "wishart_opnorm_bounds",
    "xi_majorant_pointwise",
    "xi_majorant_sum",
    "tensor_diag_envelope",
    "tensor_offdiag",
    "tensor_sdd_floor",
    "tensor_opnorm_bounds",
    "contraction_young_step",
    "contraction_sum_2p_minus_1",
)


def check_instance(results, n, d, r, s, p_values=(2, 3)):
    """Run every inequality on one configuration, updating ``results`` in place."""
    l1 = l1_norm(r)
    mat_ok = l1 < SQRT6_OVER_2
    ns = s_sums(s, d, 2)

    # --- Wishart family ---------------------------------------------------
    if mat_ok:
        rhs = 2 * l1 * l1 - 2
        worst = max(bounds.lemma31_lhs(r, n, i, j)
                    for i in range(1, n + 1) for j in range(i, n + 1))
        results["lemma31_sum"].record(worst, min(rhs, 1.0))
        C = wishart_cov_exact(n, d, r, s).entries
        diag = np.diag(C)
        results["wishart_diag_supinf"].record(ns.s2_sum / d, float(diag.min()))
        results["wishart_diag_supinf"].record(float(diag.max()), 2 * ns.s2_sum / d)
        gap = bounds.dd_gap(C)
        results["wishart_sdd_floor"].record(ns.s2_sum / d * (3 - 2 * l1 * l1), gap)
        inv_true, op_true = bounds.opnorm_truth(C)
        results["wishart_varah"].record(inv_true, 1.0 / gap, EIG_RTOL)
        inv_up, op_up = bounds.opnorm_bounds_matrix(n, d, r, s)
        results["wishart_opnorm_bounds"].record(inv_true, inv_up, EIG_RTOL)
        results["wishart_opnorm_bounds"].record(op_true, op_up, EIG_RTOL)
        xi = bounds.xi_majorant_checks(n, d, r, s)
        results["xi_majorant_pointwise"].cases += xi.pairs_checked
        results["xi_majorant_pointwise"].violations += xi.pairs_violating
        results["xi_majorant_pointwise"].worst_slack = min(
            results["xi_majorant_pointwise"].worst_slack, xi.min_slack)
        results["xi_majorant_sum"].record(xi.majorant_sum, xi.majorant_cap)
    else:
        for name in ("lemma31_sum", "wishart_diag_supinf", "wishart_sdd_floor",
                     "wishart_varah", "wishart_opnorm_bounds",
                     "xi_majorant_pointwise", "xi_majorant_sum"):
            results[name].skip()

    # --- tensor family ----------------------------------------------------
    for p in p_values:
        names = ("tensor_diag_envelope", "tensor_offdiag", "tensor_sdd_floor",
                 "tensor_opnorm_bounds", "contraction_young_step",
                 "contraction_sum_2p_minus_1")
        if p > n or tensor_margin(l1, p) <= 0:
            for name in names:
                results[name].skip()
            continue
        nsp = s_sums(s, d, p)
        sp = abs(nsp.sp_sum)
        Ct = tensor_cov_exact(n, d, p, r, s).entries
        lo, hi = bounds.tensor_diag_envelope(d, p, r, s)
        diag = np.diag(Ct)
        results["tensor_diag_envelope"].record(lo, float(diag.min()))
        results["tensor_diag_envelope"].record(float(diag.max()), hi)
        off = np.abs(Ct).sum(axis=1) - np.abs(diag)
        results["tensor_offdiag"].record(float(off.max()), bounds.tensor_offdiag_bound(d, p, r, s))
        margin = tensor_margin(l1, p)
        results["tensor_sdd_floor"].record(sp / d * margin, bounds.dd_gap(Ct))
        if sp > 0:
            inv_true, op_true = bounds.opnorm_truth(Ct)
            inv_up, op_up = bounds.opnorm_bounds_tensor(n, d, p, r, s)
            results["tensor_opnorm_bounds"].record(inv_true, inv_up, EIG_RTOL)
            results["tensor_opnorm_bounds"].record(op_true, op_up, EIG_RTOL)
        else:
            results["tensor_opnorm_bounds"].skip()
        cap_sum = bounds.contraction_sum_cap(n, d, r, s, p)
        for q in range(1, p):
            lhs, rhs = bounds.s_young_step(d, p, q, s)
            mid, _ = bounds.s_young_step(d, 2, 1, s)
            results["contraction_young_step"].record(lhs, mid)
            results["contraction_young_step"].record(mid, rhs)
            results["contraction_sum_2p_minus_1"].record(
                bounds.contraction_sum(n, d, p, q, r, s), cap_sum)


def oracle_equivalence(n, d, r, s, p_values=(2, 3), rtol=1e-10):
    """Largest relative gap between closed forms and the kernel algebra."""
    amb = Ambient(n, d, r, s)
    worst = 0.0

    def rel(a, b):
        return abs(a - b) / max(abs(a), abs(b), 1e-300) if a != b else 0.0

    C = wishart_cov_exact(n, d, r, s)
    ks = [wishart_kernel(amb, *t) for t in C.index]
    scale = max(1e-300, float(np.max(np.abs(C.entries))))
    for a, ka in enumerate(ks):
        for b, kb in enumerate(ks):
            worst = max(worst, abs(C.entries[a, b] - 2 * inner(ka, kb)) / scale)
    for p in p_values:
        if p > n:
            continue
        T = tensor_cov_exact(n, d, p, r, s)
        kt = [tensor_kernel(amb, t) for t in T.index]
        fp = math.factorial(p)
        scale = max(1e-300, float(np.max(np.abs(T.entries))))
        for a, ka in enumerate(kt):
            for b, kb in enumerate(kt):
                worst = max(worst, abs(T.entries[a, b] - fp * inner(ka, kb)) / scale)
        # contraction norms on a few index pairs, including equal ones
        tuples = increasing_tuples(n, p)
        pairs = [(tuples[0], tuples[0]), (tuples[0], tuples[-1]), (tuples[-1], tuples[len(tuples) // 2])]
        for q in range(1, p):
            for ja, jb in pairs:
                exact = contraction_norm_sq_exact(n, d, p, q, ja, jb, r, s)
                algebra = norm_sq(contract(tensor_kernel(amb, ja), tensor_kernel(amb, jb), q))
                worst = max(worst, rel(exact, algebra) if max(exact, algebra) > 1e-14 else 0.0)
    return worst


def run_suite(n_values=range(1, 7), d_values=range(1, 9), p_values=(2, 3), trials=200,
              seed=0, r=None, s=None):
    """Randomised suite; fixed ``r``/``s`` replace the random draws when given."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = generator(seed, 99)
    results = {name: CheckResult(name) for name in CHECK_NAMES}
    n_values, d_values = list(n_values), list(d_values)
    l1_cap_tensor = max_l1_tensor(min(p_values)) if p_values else SQRT6_OVER_2
    for t in range(trials):
        n = int(rng.choice(n_values))
        d = int(rng.choice(d_values))
        if r is not None:
            rr = r
        else:
            # alternate between matrix-admissible and tensor-admissible draws
            cap = SQRT6_OVER_2 if t % 2 == 0 else l1_cap_tensor
            rr = random_r_table(rng, l1_max=cap)
        ss = s if s is not None else random_s_table(rng)
        check_instance(results, n, d, rr, ss, p_values)
    return [results[name] for name in CHECK_NAMES]
