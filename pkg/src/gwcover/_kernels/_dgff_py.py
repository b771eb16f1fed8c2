"""Pure-Python DGFF leaf maxima; same normal draws as the compiled kernel."""

import numpy as np


def leaf_max(rng, parent, sd, gen_start, out):
    nn = parent.shape[0]
    eta = np.zeros(nn)
    spans = list(zip(gen_start[:-1].tolist(), gen_start[1:].tolist()))
    leaf_lo = spans[-1][0]
    for t in range(out.shape[0]):
        z = rng.standard_normal(nn - 1)
        for lo, hi in spans:
            eta[lo:hi] = eta[parent[lo:hi]] + sd[lo:hi] * z[lo - 1:hi - 1]
        out[t] = eta[leaf_lo:].max()
