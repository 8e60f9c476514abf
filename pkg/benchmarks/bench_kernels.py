"""Time the numba kernels against their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--quick]

The first numba call of each kernel compiles it; that call is excluded.
"""

import argparse
import time

import numpy as np

from wishart_stein import _kernels
from wishart_stein._accel import HAVE_NUMBA
from wishart_stein.covariance import CovarianceFunction, toeplitz_values
from wishart_stein.sampler import _wick_tables, increasing_tuples


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def cases(quick):
    rng = np.random.default_rng(0)
    r = CovarianceFunction.table([1, 0.3, 0.1])
    s = CovarianceFunction.exponential(1.0)

    n, d, p, T = 6, 12, 3, 1500 if quick else 6000
    R, S = toeplitz_values(r, n), toeplitz_values(s, d)
    terms = [(rng.integers(0, n, (T, p)), rng.integers(0, d, (T, p)), rng.normal(size=T)) for _ in range(2)]
    yield (f"gram_bilinear T={T} p={p}",
           lambda: _kernels.gram_bilinear_numpy(*terms[0], *terms[1], R, S),
           lambda: _kernels.gram_bilinear_numba(*terms[0], *terms[1], R, S))

    d = 40 if quick else 120
    S = toeplitz_values(s, d)
    yield (f"quad_sum d={d}",
           lambda: _kernels.quad_sum_numpy(S, S**2),
           lambda: _kernels.quad_sum_numba(S, S**2))

    B, n, d = (500, 5, 200) if quick else (2000, 6, 500)
    X = rng.normal(size=(B, n, d))
    args = _wick_tables(increasing_tuples(n, 3), r)
    yield (f"wick_columns B={B} n={n} d={d} p=3",
           lambda: _kernels.wick_columns_numpy(X, *args),
           lambda: _kernels.wick_columns_numba(X, *args))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--quick", action="store_true")
    a = ap.parse_args()
    if not HAVE_NUMBA:
        print("numba is not installed; the numba column runs the plain python loops")
    print(f"{'kernel':38s} {'numpy [s]':>11s} {'numba [s]':>11s} {'speedup':>8s} {'max diff':>10s}")
    for name, f_np, f_nb in cases(a.quick):
        f_nb()  # compile
        t_np, x = best_of(f_np, a.repeat)
        t_nb, y = best_of(f_nb, a.repeat)
        diff = float(np.max(np.abs(np.asarray(x) - np.asarray(y))))
        print(f"{name:38s} {t_np:11.4f} {t_nb:11.4f} {t_np / t_nb:8.2f} {diff:10.2e}")


if __name__ == "__main__":
    main()
