"""Exact expected cover times of tiny trees by first-step analysis.

States are pairs (current vertex, visited set).  Each holding time has mean
1, so E[T | x, S] = 1 + sum_y p(x, y) E[T | y, S + y], with the remaining
time 0 once the move completes the cover.  Independent of the walk engine.
"""

import numpy as np


def _moves(parent, children, lam, x):
    if x == 0:
        return [(children[0][0], 1.0)]
    nu = len(children[x])
    out = [(parent[x], lam / (lam + nu))]
    out += [(c, 1.0 / (lam + nu)) for c in children[x]]
    return out


def expected_cover_time(parent, lam):
    """E T_cov for the walk started at the artificial root (node 0).

    ``parent[i]`` is the parent of node i, ``parent[0] = -1``; node 1 is the root.
    """
    nn = len(parent)
    if nn > 12:
        raise ValueError("state space too large for the dense oracle")
    children = [[] for _ in range(nn)]
    for i in range(1, nn):
        children[parent[i]].append(i)
    full = (1 << nn) - 1
    states = [(x, s) for s in range(1 << nn) for x in range(nn) if s >> x & 1 and s & 1 and s != full]
    index = {st: k for k, st in enumerate(states)}
    A = np.eye(len(states))
    b = np.ones(len(states))
    for (x, s), k in index.items():
        for y, p in _moves(parent, children, lam, x):
            s2 = s | (1 << y)
            if s2 != full:
                A[k, index[(y, s2)]] -= p
    sol = np.linalg.solve(A, b)
    return float(sol[index[(0, 1)]]) if nn > 1 else 0.0

