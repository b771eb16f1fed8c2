"""PG(a, b) laws and the walk-free sampler of local-time fields.

PG(a, b) is the law of E_1 + ... + E_P with P ~ Poisson(a) and E_i i.i.d.
Exp(b) (mean 1/b).  Conditionally on P = p the sum is Gamma(p, scale 1/b),
which is how it is drawn here.
"""

from dataclasses import dataclass
import math

import numpy as np

from .errors import InvalidRegime, ValidationError
from .tree import ancestor_generation, sigma_sq
from .walk import LocalTimeField


@dataclass(frozen=True)
class PGParams:
    a: float
    b: float

    def __post_init__(self):
        if not (self.a >= 0 and math.isfinite(self.a)):
            raise ValidationError(f"PG intensity a must be >= 0, got {self.a}")
        if not (self.b > 0 and math.isfinite(self.b)):
            raise ValidationError(f"PG rate b must be > 0, got {self.b}")


def _pg_draw(a, scale, rng):
    # numpy's Poisson is exact for every mean (multiplication below 10, PTRS above)
    counts = rng.poisson(a)
    return np.where(counts > 0, rng.gamma(np.maximum(counts, 1), scale), 0.0)


def pg_sample(p, rng, size=None):
    """Draw from PG(p.a, p.b); exact zeros when the Poisson count is 0."""
    if size is None:
        return float(_pg_draw(p.a, 1.0 / p.b, rng))
    return _pg_draw(np.full(size, p.a), 1.0 / p.b, rng)


def pg_zero_prob(a):
    return math.exp(-a)


def pg_mean(p):
    return p.a / p.b


def pg_var(p):
    return 2 * p.a / p.b**2


def pg_low_tail_bound(p):
    """Chernoff bound exp(2 sqrt(ab) - a - b) on P(X <= 1), X ~ PG(a, b).

    Valid for a >= b; at a == b the bound is the trivial value 1.
    """
    if p.a < p.b:
        raise ValidationError(f"low-tail bound needs a >= b, got a={p.a}, b={p.b}")
    return math.exp(2 * math.sqrt(p.a * p.b) - p.a - p.b)


def t_mu(stats, mu):
    """Excursion budget sigma_n^2 (log Z_n + mu)."""
    level = math.log(stats.z_n) + mu
    if not level > 0:
        raise InvalidRegime(f"log Z_n + mu = {level:.6g} <= 0")
    return float(stats.sigma_sq[-1]) * level


def _increments(tree, lam):
    # sigma_k^2 - sigma_{k-1}^2 = lam^k, with sigma_{-1}^2 = 0
    return np.power(float(lam), np.arange(tree.n + 1))


def sample_field_exact(tree, lam, t, rng):
    """Local-time field at excursion budget ``t`` without simulating the walk.

    Top-down: L at the artificial root is t; a vertex at depth k whose parent
    has value s gets PG(s / lam^k, 1 / lam^k), independently across siblings.
    """
    if not t > 0:
        raise ValidationError(f"excursion budget must be > 0, got {t}")
    values = np.empty(tree.size)
    values[0] = t
    inc = _increments(tree, lam)
    gs = tree.gen_start
    for k in range(tree.n + 1):
        lo, hi = gs[k], gs[k + 1]
        s = values[tree.parent[lo:hi]]
        values[lo:hi] = _pg_draw(s / inc[k], inc[k], rng)
    return LocalTimeField(values, float(t))


def sample_field_batch(tree, lam, t, rng, size):
    """``size`` independent fields as a ``(size, tree.size)`` array."""
    values = np.empty((size, tree.size))
    values[:, 0] = t
    inc = _increments(tree, lam)
    gs = tree.gen_start
    for k in range(tree.n + 1):
        lo, hi = gs[k], gs[k + 1]
        s = values[:, tree.parent[lo:hi]]
        values[:, lo:hi] = _pg_draw(s / inc[k], inc[k], rng)
    return values


def extend_field(field, tree, lam, dt, rng):
    """Field at budget ``field.budget + dt`` coupled to ``field``.

    Local times are additive over excursions from the artificial root, so the
    extension adds an independent field at budget ``dt``.
    """
    more = sample_field_exact(tree, lam, dt, rng)
    return LocalTimeField(field.values + more.values, field.budget + dt)


def coupled_fields(tree, lam, budgets, rng):
    """Fields at nondecreasing budgets along one excursion path."""
    out = []
    field = None
    prev = 0.0
    for b in budgets:
        if b < prev:
            raise ValidationError("budgets must be nondecreasing")
        if field is None:
            field = sample_field_exact(tree, lam, b, rng)
        elif b > prev:
            field = extend_field(field, tree, lam, b - prev, rng)
        out.append(field)
        prev = b
    return out


@dataclass(frozen=True)
class LandscapeReport:
    max_ancestor_deviation: float
    uncovered_leaves: np.ndarray
    distinct_ancestors: object  # bool, or None with fewer than two uncovered leaves
    early_uncovered: int
    ancestor_gen: int

    @property
    def count(self):
        return int(self.uncovered_leaves.size)


def default_c(lam):
    """Smallest convenient ancestor-depth constant above 3/log(lam)."""
    return 1.01 * 3 / math.log(lam)


def landscape_diagnostics(field, tree, lam, c=None):
    """Extremal-landscape summary of a frozen field.

    Looks at generation r = n - floor(c log n): the largest deviation
    |L^x - t| / sigma_n^2 there, whether the uncovered leaves have pairwise
    distinct ancestors at r, and how many vertices above depth n are still
    unvisited.
    """
    c = default_c(lam) if c is None else c
    if c <= 3 / math.log(lam):
        raise ValidationError(f"c={c} must exceed 3/log(lambda)")
    n = tree.n
    vals = field.values
    r = ancestor_generation(n, c)
    sig_n = sigma_sq(lam, n)
    dev = float(np.max(np.abs(vals[tree.generation(r)] - field.budget)) / sig_n)
    leaves = tree.generation(n)
    unc = leaves[vals[leaves] == 0.0]
    distinct = None
    if unc.size >= 2:
        anc = tree.ancestor_at(unc, r)
        distinct = bool(np.unique(anc).size == anc.size)
    early = int(np.count_nonzero(vals[1:tree.gen_start[n]] == 0.0))
    return LandscapeReport(dev, unc, distinct, early, r)


def expected_uncovered(tree, lam, t):
    """Analytic E #{|x| = n : L^x(t) = 0} = Z_n exp(-t / sigma_n^2)."""
    return int(tree.z[-1]) * math.exp(-t / sigma_sq(lam, tree.n))


def budget_for(tree, lam, mu):
    """t_n^mu computed straight from the tree."""
    level = math.log(int(tree.z[-1])) + mu
    if not level > 0:
        raise InvalidRegime(f"log Z_n + mu = {level:.6g} <= 0")
    return sigma_sq(lam, tree.n) * level


def uncovered_count_experiment(tree, lam, mu, trials, rng, c=None, reports=False):
    """Per-trial counts of generation-n vertices unvisited at budget t_n^mu.

    With ``reports`` the per-trial :class:`LandscapeReport` list is returned
    alongside the counts.
    """
    t = budget_for(tree, lam, mu)
    counts = np.empty(trials, dtype=np.int64)
    reps = []
    for i in range(trials):
        rep = landscape_diagnostics(sample_field_exact(tree, lam, t, rng), tree, lam, c)
        counts[i] = rep.count
        if reports:
            reps.append(rep)
    return (counts, reps) if reports else counts
