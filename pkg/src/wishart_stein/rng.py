"""Reproducible, parallel-safe random streams.

Replicates are grouped into fixed-size blocks.  Block ``b`` of a run with
seed ``seed`` draws from a Philox (counter-based, 64-bit) generator keyed by
``SeedSequence(seed, spawn_key=(tag, b))``.  The block size depends only on
the per-replicate footprint, never on the worker count, so results are
bit-identical for any number of workers.
"""

from concurrent.futures import ThreadPoolExecutor

import numpy as np

DEFAULT_SEED = 20240601
# doubles drawn per block, bounds memory per worker
BLOCK_BUDGET = 1 << 21


def generator(seed, *key):
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def block_size(per_replicate, cap=4096):
    return int(max(1, min(cap, BLOCK_BUDGET // max(1, int(per_replicate)))))


def map_blocks(fn, m, per_replicate, seed, tag=0, workers=1):
    """Call ``fn(rng, count)`` on each block and concatenate along axis 0.

    ``fn`` must return an array whose first axis has length ``count``.
    """
    if m < 0:
        raise ValueError("number of replicates must be >= 0")
    size = block_size(per_replicate)
    counts = [min(size, m - start) for start in range(0, m, size)]

    def run(b):
        return fn(generator(seed, tag, b), counts[b])

    if workers is None or workers <= 1 or len(counts) <= 1:
        parts = [run(b) for b in range(len(counts))]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, range(len(counts))))
    if not parts:
        return None
    return np.concatenate(parts, axis=0)
