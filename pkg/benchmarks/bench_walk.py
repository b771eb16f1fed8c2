"""Compare the compiled walk/DGFF kernels with the pure-Python fallback.

    python3 benchmarks/bench_walk.py [--depth 10] [--repeat 3]

Both backends are run on identical streams, so the outputs are also checked
for equality.
"""

import argparse
import time

import numpy as np

from gwcover import _kernels
from gwcover._kernels import _dgff_py, _walk_py
from gwcover.dgff import _increment_sd
from gwcover.tree import OffspringSpec, sample_tree


def _best(fn, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--depth", type=int, default=10)
    ap.add_argument("--lam", type=float, default=2.0)
    ap.add_argument("--fields", type=int, default=200)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    tree = sample_tree(OffspringSpec.binomial(2, 0.75), args.depth, np.random.default_rng(args.seed))
    arrays = (tree.parent, tree.child_start, tree.num_children)
    sd = _increment_sd(tree, args.lam)
    print(f"tree: depth {tree.n}, {tree.size - 1} vertices, Z_n = {int(tree.z[-1])}; lambda = {args.lam}")

    backends = {"python": (_walk_py, _dgff_py)}
    if _kernels.BACKEND == "cython":
        from gwcover._kernels import _dgff_ext, _walk_ext

        backends["cython"] = (_walk_ext, _dgff_ext)
    else:
        print("compiled kernels not available; timing the fallback only")

    res = {}
    for name, (w, d) in backends.items():
        tc, cov = _best(lambda: w.cover(np.random.default_rng(args.seed), *arrays, args.lam), args.repeat)
        t_budget = float(cov[2])

        def run_budget():
            occ = np.zeros(tree.size)
            return w.budget(np.random.default_rng(args.seed), *arrays, args.lam, t_budget, occ), occ

        tb, (bud, occ) = _best(run_budget, args.repeat)

        def run_max():
            out = np.empty(args.fields)
            d.leaf_max(np.random.default_rng(args.seed), tree.parent, sd, tree.gen_start, out)
            return out

        tm, mx = _best(run_max, args.repeat)
        res[name] = (cov, bud, occ, mx)
        print(
            f"{name:>7}: cover {tc:8.3f} s ({1e9 * tc / cov[1]:6.1f} ns/step over {cov[1]} steps) | "
            f"budget {tb:8.3f} s ({1e9 * tb / bud[1]:6.1f} ns/step) | "
            f"dgff max {tm:7.3f} s ({1e9 * tm / (args.fields * (tree.size - 1)):5.1f} ns/vertex)"
        )
        res[name] += (tc, tb, tm)

    if len(res) == 2:
        py, cy = res["python"], res["cython"]
        same = (tuple(py[0]) == tuple(cy[0]) and tuple(py[1]) == tuple(cy[1])
                and np.array_equal(py[2], cy[2]) and np.array_equal(py[3], cy[3]))
        print(f"speed-up: cover x{py[4] / cy[4]:.1f}, budget x{py[5] / cy[5]:.1f}, dgff max x{py[6] / cy[6]:.1f}")
        print(f"outputs identical: {same}")


if __name__ == "__main__":
    main()
