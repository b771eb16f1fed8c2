"""Fast end-to-end checks behind ``gwcover selftest``."""

import math
import os
import tempfile

import numpy as np

from . import pglocal, stats, walk
from .oracles import expected_cover_time
from .tree import TreeArena


def _line(name, ok, detail):
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    return ok


def check_pg(n=200_000, seed=1):
    ok = True
    rng = np.random.default_rng(seed)
    for a in (0.5, 1.0, 4.0):
        for b in (0.25, 1.0, 2.0):
            p = pglocal.PGParams(a, b)
            x = pglocal.pg_sample(p, rng, size=n)
            m, se = stats.mean_se(x)
            v, vse = stats.var_se(x)
            z = float(np.mean(x == 0))
            zse = stats.proportion_se(math.exp(-a), n)
            ok &= stats.within(m, pglocal.pg_mean(p), se, 3)
            ok &= stats.within(v, pglocal.pg_var(p), vse, 5)
            ok &= stats.within(z, pglocal.pg_zero_prob(a), zse, 3)
    return _line("pg-moments", ok, f"3x3 grid, N={n}")


def check_oracle(n=20_000, seed=2):
    tree = TreeArena.from_child_counts([1, 0])
    exact = expected_cover_time(tree.parent.tolist(), 2.0)
    rng = np.random.default_rng(seed)
    T = np.array([walk.run_to_cover(tree, 2.0, rng).t_cover_real for _ in range(n)])
    m, se = stats.mean_se(T)
    return _line("cover-oracle", stats.within(m, exact, se, 3), f"mean {m:.4f} +- {se:.4f} vs exact {exact:.4f}")


def check_backends(seed=3):
    from . import _kernels
    from .tree import regular_tree

    if _kernels.BACKEND != "cython":
        return _line("backends", True, "compiled kernel not built; fallback only")
    tree = regular_tree(2, 4)
    a = _kernels.cover(np.random.default_rng(seed), tree.parent, tree.child_start, tree.num_children, 2.0)
    b = _kernels._walk_py.cover(np.random.default_rng(seed), tree.parent, tree.child_start, tree.num_children, 2.0)
    same = tuple(map(float, a)) == tuple(map(float, b))
    return _line("backends", same, "compiled and pure-Python cover runs identical" if same else f"{a} != {b}")


def check_determinism(scratch=None):
    from .experiments import parse_config, run_experiment

    text = '{"experiment": "cover", "offspring": [0, 0, 1], "lambda": 2.0, "n": 4, "trials": 20, "master_seed": 7}'
    with tempfile.TemporaryDirectory(dir=scratch) as tmp:
        blobs = []
        for w in (1, 2):
            out = run_experiment(parse_config(text, workers=w, output_dir=os.path.join(tmp, f"w{w}")))
            with open(os.path.join(out, "trials.csv"), "rb") as fh:
                blobs.append(fh.read())
    return _line("determinism", blobs[0] == blobs[1], "trials.csv identical for workers 1 and 2")


def run_selftest(scratch=None):
    results = [check_pg(), check_oracle(), check_backends(), check_determinism(scratch)]
    return all(results)
