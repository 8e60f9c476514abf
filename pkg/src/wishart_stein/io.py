"""Report writers: flat JSON for single reports, CSV for tables and sweeps.

Floats are written with 17 significant digits so values round-trip exactly.
"""

import json
import math

import numpy as np

FLOAT_FORMAT = "%.17g"


def fmt(x):
    """Text form of a scalar cell; floats use 17 significant digits."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return FLOAT_FORMAT % float(x)
    return str(x)


def _json_value(x):
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return "null" if not math.isfinite(x) else FLOAT_FORMAT % x
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if x is None:
        return "null"
    if isinstance(x, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_json_value(v) for v in x) + "]"
    if isinstance(x, dict):
        return dumps(x, indent=None)
    return json.dumps(str(x))


def dumps(record, indent=2):
    """Serialise a flat mapping; non-finite floats become ``null``."""
    items = [f"{json.dumps(str(k))}: {_json_value(v)}" for k, v in record.items()]
    if indent is None:
        return "{" + ", ".join(items) + "}"
    pad = " " * indent
    return "{\n" + ",\n".join(pad + it for it in items) + "\n}\n"


def csv_lines(header, rows, comments=()):
    out = [f"# {c}" for c in comments]
    out.append(",".join(header))
    out.extend(",".join(fmt(v) for v in row) for row in rows)
    return "\n".join(out) + "\n"


def index_label(prefix, t):
    return prefix + "_" + "_".join(str(i) for i in t)


def cov_csv(cov, prefix="W"):
    """Covariance matrix with a labelled header row and a label column."""
    labels = [index_label(prefix, t) for t in cov.index]
    order = "row-major upper triangle, 1-based (i <= j)" if prefix == "W" \
        else "increasing index tuples in lexicographic order, 1-based"
    rows = [[lab, *map(float, row)] for lab, row in zip(labels, np.asarray(cov.entries))]
    return csv_lines(["index", *labels], rows, comments=[f"index_map: {order}"])


def samples_csv(values, index, prefix="W"):
    """One replicate per row."""
    labels = [index_label(prefix, t) for t in index]
    rows = [list(map(float, row)) for row in np.asarray(values)]
    return csv_lines(labels, rows)


def emit(text, out=None, append=False):
    if out is None or out == "-":
        print(text, end="")
        return
    with open(out, "a" if append else "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
