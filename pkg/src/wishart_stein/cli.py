"""Command-line front end.

Every command is deterministic given its flags.  Exit codes: 0 success,
1 a check failed, 2 inadmissible input, 3 vacuous bound, 64 usage error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import io
from .bounds import matrix_bound, tensor_bound
from .checks import oracle_equivalence, random_r_table, random_s_table, run_suite
from .covariance import parse_covariance
from .distance import (
    DEFAULT_PROJECTIONS,
    SWEEP_COLUMNS,
    mc_tensor_distance,
    mc_wishart_distance,
    run_sweep,
    slope_fit,
)
from .errors import (
    BoundVacuousError,
    DivergenceError,
    InadmissibleError,
    NotPSDError,
    ResourceBudgetError,
)
from .exact import Ambient, tensor_cov_exact, tensor_kernel, variance_formula, wishart_cov_exact
from .rng import DEFAULT_SEED, generator
from .sampler import (
    EnsembleSpec,
    half_index,
    increasing_tuples,
    malliavin_replicates,
    tensor_replicates,
    wishart_replicates,
)

EXIT_OK, EXIT_FAIL, EXIT_INADMISSIBLE, EXIT_VACUOUS, EXIT_USAGE = 0, 1, 2, 3, 64


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _int_list(text):
    """``"2,4,8"`` or a range ``"1-6"``."""
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(float(part)) if "e" in part.lower() else int(part))
    if not out:
        raise argparse.ArgumentTypeError(f"empty list: {text!r}")
    return out


def _positive_int(text):
    v = int(float(text)) if "e" in str(text).lower() else int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _covariance(text):
    try:
        return parse_covariance(text)
    except (ValueError, TypeError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _bool(text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {text!r}")


def _mode(text):
    t = str(text).strip().lower()
    if t == "both":
        return "both"
    return _bool(t)


def _tuple(text):
    return tuple(_int_list(text))


def read_config(path):
    """Flat ``key = value`` file; keys mirror long flag names."""
    argv = []
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path!r}: {exc}") from None
    for num, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{num}: expected key=value")
        key, value = (t.strip() for t in line.split("=", 1))
        argv += ["--" + key.replace("_", "-"), value]
    return argv


def _common(p, n=True, d=True):
    if n:
        p.add_argument("--n", type=_positive_int, required=True)
    if d:
        p.add_argument("--d", type=_positive_int, required=True)
    p.add_argument("--r", type=_covariance, default=parse_covariance("delta"),
                   help="row covariance: delta | exp:LAMBDA[,ALPHA] | table:1,r1,...")
    p.add_argument("--s", type=_covariance, default=parse_covariance("delta"),
                   help="column covariance, same syntax as --r")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--out", default=None, help="output file (default stdout)")
    p.add_argument("--config", default=None, help="flat key=value file mirroring the flags")


def _workers(p):
    p.add_argument("--workers", type=_positive_int, default=os.cpu_count() or 1)


def build_parser():
    parser = Parser(prog="wishart-stein",
                    description="Wishart and tensor Gaussian approximation: bounds, oracles, Monte Carlo.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=Parser)

    p = sub.add_parser("bound", help="closed-form Wasserstein bound (JSON)")
    _common(p)
    p.add_argument("--p", type=_positive_int, default=None,
                   help="tensor order; omit for the Wishart matrix bound")
    p.add_argument("--c-p", type=float, default=1.0)

    p = sub.add_parser("check", help="randomised inequality suite (CSV)")
    _common(p, n=False, d=False)
    p.set_defaults(r=None, s=None)
    p.add_argument("--n", type=_int_list, default=list(range(1, 7)))
    p.add_argument("--d", type=_int_list, default=list(range(1, 9)))
    p.add_argument("--p", type=_int_list, default=[2, 3])
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--oracle-trials", type=int, default=20)

    p = sub.add_parser("mc-var", help="Monte-Carlo variance of p^-1 <DF, DG> vs the closed formula (CSV)")
    _common(p, n=False)
    _workers(p)
    p.add_argument("--p", type=_positive_int, default=2)
    p.add_argument("--n", type=_positive_int, default=None, help="default: p")
    p.add_argument("--j", type=_tuple, default=None, help="row tuple of F (default 1,...,p)")
    p.add_argument("--jp", type=_tuple, default=None, help="row tuple of G (default --j)")
    p.add_argument("--m", type=_positive_int, default=100000)
    p.add_argument("--factorial-mode", type=_mode, default="both")

    p = sub.add_parser("sample", help="Monte-Carlo replicates (CSV)")
    _common(p)
    _workers(p)
    p.add_argument("--p", type=_positive_int, default=None,
                   help="tensor order; omit for half-vectorised Wishart draws")
    p.add_argument("--m", type=_positive_int, default=1)

    p = sub.add_parser("cov", help="exact covariance matrix (CSV)")
    _common(p)
    p.add_argument("--p", type=_positive_int, default=None)

    p = sub.add_parser("distance", help="sliced W1 estimate with the bound (JSON)")
    _common(p)
    _workers(p)
    p.add_argument("--p", type=_positive_int, default=2)
    p.add_argument("--m", type=_positive_int, default=2000)
    p.add_argument("--n-proj", type=_positive_int, default=DEFAULT_PROJECTIONS)
    p.add_argument("--c-p", type=float, default=1.0)

    p = sub.add_parser("sweep", help="grid of bounds and estimates with slope fits (CSV)")
    _common(p, n=False, d=False)
    _workers(p)
    p.add_argument("--n", type=_int_list, required=True)
    p.add_argument("--d", type=_int_list, required=True)
    p.add_argument("--p", type=_positive_int, default=2)
    p.add_argument("--m", type=_positive_int, default=2000)
    p.add_argument("--n-proj", type=_positive_int, default=DEFAULT_PROJECTIONS)
    p.add_argument("--c-p", type=float, default=1.0)
    p.add_argument("--no-mc", action="store_true", help="bound columns only")
    p.add_argument("--append", action="store_true", help="append to --out instead of overwriting")
    return parser


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_bound(a):
    if a.p is None:
        rep = matrix_bound(a.n, a.d, a.r, a.s)
    else:
        rep = tensor_bound(a.n, a.d, a.p, a.r, a.s, a.c_p)
    io.emit(io.dumps(rep.to_dict()), a.out)
    return EXIT_OK


def cmd_check(a):
    if a.trials < 1:
        raise UsageError("--trials must be >= 1")
    if a.oracle_trials < 0:
        raise UsageError("--oracle-trials must be >= 0")
    results = run_suite(a.n, a.d, tuple(a.p), a.trials, a.seed, r=a.r, s=a.s)
    rows = [[c.name, c.status, c.cases, c.violations, c.skipped,
             c.worst_slack if c.cases else math.nan] for c in results]
    # closed forms against the kernel algebra on small instances
    rng = generator(a.seed, 98)
    worst = 0.0
    for _ in range(a.oracle_trials):
        n, d = int(rng.integers(1, 5)), int(rng.integers(1, 7))
        r = a.r if a.r is not None else random_r_table(rng)
        s = a.s if a.s is not None else random_s_table(rng)
        worst = max(worst, oracle_equivalence(n, d, r, s, tuple(a.p)))
    if a.oracle_trials:
        status = "PASS" if worst <= 1e-10 else "FAIL"
        rows.append(["oracle_equivalence", status, a.oracle_trials, int(status == "FAIL"), 0, 1e-10 - worst])
    text = io.csv_lines(["check", "status", "cases", "violations", "skipped", "min_slack"], rows,
                        comments=[f"trials={a.trials} seed={a.seed}"])
    io.emit(text, a.out)
    return EXIT_FAIL if any(row[1] == "FAIL" for row in rows) else EXIT_OK


def _mc_variance(v):
    """Sample variance and its standard error from the fourth central moment."""
    m = v.shape[0]
    c = v - v.mean()
    var = float(np.sum(c**2) / (m - 1))
    mu4 = float(np.mean(c**4))
    se = math.sqrt(max(0.0, (mu4 - var * var * (m - 3) / (m - 1)) / m))
    return var, se


def cmd_mc_var(a):
    n = a.p if a.n is None else a.n
    j = a.j if a.j is not None else tuple(range(1, a.p + 1))
    jp = a.jp if a.jp is not None else j
    if len(j) != a.p or len(jp) != a.p:
        raise UsageError(f"--j and --jp need exactly p={a.p} indices")
    if any(not 1 <= i <= n for i in j + jp):
        raise UsageError(f"indices must lie in 1..{n}")
    if a.m < 4:
        raise UsageError("--m must be >= 4")
    spec = EnsembleSpec(n, a.d, a.r, a.s, a.seed)
    V = malliavin_replicates(spec, j, jp, a.m, workers=a.workers)[:, 0]
    mc_var, se = _mc_variance(V)
    amb = Ambient(n, a.d, a.r, a.s)
    f, g = tensor_kernel(amb, j), tensor_kernel(amb, jp)
    modes = [True, False] if a.factorial_mode == "both" else [a.factorial_mode]
    rows = []
    for mode in modes:
        val = variance_formula(a.p, f, g, factorial_mode=mode)
        z = (mc_var - val) / se if se > 0 else (0.0 if mc_var == val else math.inf)
        rows.append(["factorial" if mode else "linear", val, mc_var, se, z, abs(z) <= 5.0])
    comments = [f"p={a.p} n={n} d={a.d} r={a.r.spec_string()} s={a.s.spec_string()} "
                f"j={','.join(map(str, j))} jp={','.join(map(str, jp))} m={a.m} seed={a.seed}",
                f"mc_mean={io.fmt(float(V.mean()))}"]
    text = io.csv_lines(["mode", "formula", "mc_var", "se", "z", "within_5se"], rows, comments)
    io.emit(text, a.out)
    return EXIT_OK


def cmd_sample(a):
    spec = EnsembleSpec(a.n, a.d, a.r, a.s, a.seed)
    if a.p is None:
        vals = wishart_replicates(spec, a.m, workers=a.workers)
        text = io.samples_csv(vals, half_index(a.n), "W")
    else:
        vals = tensor_replicates(spec, a.p, a.m, workers=a.workers)
        text = io.samples_csv(vals, increasing_tuples(a.n, a.p), "Y")
    io.emit(text, a.out)
    return EXIT_OK


def cmd_cov(a):
    if a.p is None:
        text = io.cov_csv(wishart_cov_exact(a.n, a.d, a.r, a.s), "W")
    else:
        text = io.cov_csv(tensor_cov_exact(a.n, a.d, a.p, a.r, a.s), "Y")
    io.emit(text, a.out)
    return EXIT_OK


def cmd_distance(a):
    spec = EnsembleSpec(a.n, a.d, a.r, a.s, a.seed)
    if a.p == 2:
        rec = mc_wishart_distance(spec, a.m, a.n_proj, workers=a.workers)
    else:
        rec = mc_tensor_distance(spec, a.p, a.m, a.n_proj, workers=a.workers, c_p=a.c_p)
    out = rec.to_dict()
    out["r"], out["s"] = a.r.spec_string(), a.s.spec_string()
    io.emit(io.dumps(out), a.out)
    return EXIT_OK


def _fit_comments(records, column):
    lines = []
    for axis, other in (("n", "d"), ("d", "n")):
        groups = {}
        for rec in records:
            groups.setdefault(getattr(rec, other), []).append(rec)
        for key in sorted(groups):
            pts = [(getattr(rec, axis), getattr(rec, column)) for rec in groups[key]]
            if len({x for x, _ in pts}) < 3:
                continue
            try:
                slope, icpt, r2 = slope_fit(pts)
            except ValueError:
                continue
            lines.append(f"slope_fit column={column} axis={axis} {other}={key} "
                         f"slope={io.fmt(slope)} intercept={io.fmt(icpt)} r2={io.fmt(r2)}")
    return lines


def cmd_sweep(a):
    records = run_sweep(a.n, a.d, a.r, a.s, p=a.p, m=a.m, n_proj=a.n_proj, seed=a.seed,
                        workers=a.workers, monte_carlo=not a.no_mc, c_p=a.c_p)
    header = [f"r={a.r.spec_string()} s={a.s.spec_string()} metric=half-vector Euclidean "
              f"half_factor={io.fmt(math.sqrt(2.0))}"]
    text = io.csv_lines(SWEEP_COLUMNS, [rec.row() for rec in records], header)
    fits = []
    for column in ("rhs_theorem", "rhs_sharper", "estimate"):
        fits += _fit_comments(records, column)
    text += "".join(f"# {line}\n" for line in fits)
    io.emit(text, a.out, append=a.append)
    return EXIT_OK


COMMANDS = {
    "bound": cmd_bound,
    "check": cmd_check,
    "mc-var": cmd_mc_var,
    "sample": cmd_sample,
    "cov": cmd_cov,
    "distance": cmd_distance,
    "sweep": cmd_sweep,
}


def _expand_config(argv):
    argv = list(argv)
    if "--config" in argv:
        i = argv.index("--config")
        if i + 1 >= len(argv):
            raise UsageError("--config needs a path")
        path = argv[i + 1]
        del argv[i:i + 2]
        # file values first, so explicit flags win
        argv[1:1] = read_config(path)
    return argv


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        argv = _expand_config(argv)
    except UsageError as exc:
        print(f"wishart-stein: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"wishart-stein: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InadmissibleError as exc:
        print(f"wishart-stein: inadmissible input: {exc}", file=sys.stderr)
        return EXIT_INADMISSIBLE
    except BoundVacuousError as exc:
        print(f"wishart-stein: vacuous bound: {exc}", file=sys.stderr)
        return EXIT_VACUOUS
    except (NotPSDError, DivergenceError) as exc:
        print(f"wishart-stein: inadmissible input: {exc}", file=sys.stderr)
        return EXIT_INADMISSIBLE
    except (ResourceBudgetError, ValueError) as exc:
        print(f"wishart-stein: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
