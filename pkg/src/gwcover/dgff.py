"""Discrete Gaussian free field on the tree and the Ray-Knight coupling.

The field is built additively: every real vertex y carries an independent
N(0, lam^|y| / 2) increment and eta_x is the sum of increments on the ray
from the root to x, so E(eta_x - eta_y)^2 = R_eff(x, y) / 2.
"""

from dataclasses import dataclass
import math

import numpy as np

from . import _kernels
from .errors import InvalidRegime, ValidationError
from .pglocal import sample_field_exact
from .tree import sigma_sq
from .walk import run_excursion_budget


@dataclass(frozen=True)
class GaussianField:
    eta: np.ndarray


def _increment_sd(tree, lam):
    sd = np.sqrt(np.power(float(lam), tree.depth.astype(float)) / 2)
    sd[0] = 0.0
    return sd


def sample_dgff(tree, lam, rng):
    """One DGFF sample; one standard normal per real vertex, breadth-first order."""
    z = rng.standard_normal(tree.size - 1)
    sd = _increment_sd(tree, lam)
    eta = np.zeros(tree.size)
    gs = tree.gen_start
    for k in range(tree.n + 1):
        lo, hi = gs[k], gs[k + 1]
        eta[lo:hi] = eta[tree.parent[lo:hi]] + sd[lo:hi] * z[lo - 1:hi - 1]
    return GaussianField(eta)


def dgff_leaf_max(tree, lam, rng, size):
    """Maxima over generation n of ``size`` independent fields.

    Field i consumes the same normals as the i-th call of :func:`sample_dgff`.
    """
    out = np.empty(size)
    _kernels.leaf_max(rng, tree.parent, _increment_sd(tree, lam), tree.gen_start, out)
    return out


def _level(tree, mu, loglog):
    log_z = math.log(int(tree.z[-1]))
    if loglog:
        if log_z <= 0:
            raise InvalidRegime("log log Z_n undefined for Z_n = 1")
        level = log_z - 0.5 * math.log(log_z) + mu
    else:
        level = log_z + mu
    if not level > 0:
        raise InvalidRegime(f"threshold level {level:.6g} <= 0")
    return level


def max_threshold(tree, lam, mu):
    """sigma_n sqrt(log Z_n - 1/2 log log Z_n + mu)."""
    return math.sqrt(sigma_sq(lam, tree.n) * _level(tree, mu, True))


def union_threshold(tree, lam, mu):
    """sigma_n sqrt(log Z_n + mu), the level of the Gaussian union bound."""
    return math.sqrt(sigma_sq(lam, tree.n) * _level(tree, mu, False))


def max_limit(mu):
    """Limit of P(max eta <= max_threshold): exp(-e^-mu / (2 sqrt(pi)))."""
    return math.exp(-math.exp(-mu) / (2 * math.sqrt(math.pi)))


def max_limit_experiment(tree, lam, mu, trials, rng, maxima=None):
    """Empirical P(max_{|x|=n} eta_x <= max_threshold) and its standard error.

    ``mu`` may be a sequence; then all levels are evaluated on the same
    fields and arrays are returned.  Pass ``maxima`` to reuse samples.
    """
    if maxima is None:
        maxima = dgff_leaf_max(tree, lam, rng, trials)
    mus = np.atleast_1d(np.asarray(mu, dtype=float))
    thr = np.array([max_threshold(tree, lam, m) for m in mus])
    p = (maxima[:, None] <= thr[None, :]).mean(axis=0)
    se = np.sqrt(p * (1 - p) / maxima.size)
    if np.ndim(mu) == 0:
        return float(p[0]), float(se[0])
    return p, se


def gaussian_max_bound(z_n, mu):
    """Union bound e^-mu / (2 sqrt(pi (log Z_n + mu))) on P(max eta > union_threshold)."""
    if z_n < 1:
        raise ValidationError("Z_n must be >= 1")
    level = math.log(z_n) + mu
    if not level > 0:
        raise InvalidRegime(f"log Z_n + mu = {level:.6g} <= 0")
    return math.exp(-mu) / (2 * math.sqrt(math.pi * level))


def ray_knight_pair_samples(tree, lam, t, vertices, trials, rng, engine="exact"):
    """Samples of L^x(t) + eta_x^2 (side A) and (eta'_x + sqrt t)^2 (side B).

    Side A combines a local-time field (``engine`` ``"exact"`` for the
    hierarchical sampler or ``"walk"`` for the walker) with an independent
    DGFF; side B uses a third, independent DGFF.  Returns
    ``{vertex: (side_a, side_b)}``.
    """
    if engine not in ("exact", "walk"):
        raise ValidationError(f"unknown local-time engine {engine!r}")
    if not t > 0:
        raise ValidationError(f"budget must be > 0, got {t}")
    vertices = list(vertices)
    a = np.empty((trials, len(vertices)))
    b = np.empty((trials, len(vertices)))
    root_t = math.sqrt(t)
    for i in range(trials):
        if engine == "exact":
            field = sample_field_exact(tree, lam, t, rng)
        else:
            field, _ = run_excursion_budget(tree, lam, t, rng)
        eta = sample_dgff(tree, lam, rng).eta
        eta2 = sample_dgff(tree, lam, rng).eta
        a[i] = field.values[vertices] + eta[vertices] ** 2
        b[i] = (eta2[vertices] + root_t) ** 2
    return {v: (a[:, j], b[:, j]) for j, v in enumerate(vertices)}
