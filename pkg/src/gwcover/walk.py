"""Exact simulation of the continuous-time lambda-biased walk on T_n.

Every vertex has total exit rate 1: holding times are Exp(1), the walk jumps
to the parent with probability lam/(lam + nu_x) and to each child with
probability 1/(lam + nu_x); from the artificial root it always jumps to the
root.  Both entry points start at the artificial root.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ValidationError
from .tree import stationary_weights

BACKEND = _kernels.BACKEND


@dataclass(frozen=True)
class TrialResult:
    """One cover run.

    ``t_cover_real`` is the arrival instant at the last unvisited vertex,
    ``t_cover_excursion`` the holding time accumulated at the artificial
    root up to that instant.
    """

    t_cover_real: float
    steps: int
    t_cover_excursion: float
    last_vertex: int


@dataclass(frozen=True)
class LocalTimeField:
    """Normalized local times L^x (occupation time divided by pi_n(x)).

    ``values[0]`` is the artificial root and equals ``budget``.
    """

    values: np.ndarray
    budget: float

    def uncovered(self):
        return np.flatnonzero(self.values == 0.0)


def _check(lam):
    if not lam > 1:
        raise ValidationError(f"bias lambda must be > 1, got {lam}")


def _arrays(tree):
    return tree.parent, tree.child_start, tree.num_children


def run_to_cover(tree, lam, rng):
    """Run the walk until every vertex of the tree has been visited."""
    _check(lam)
    t_real, steps, t_root, last = _kernels.cover(rng, *_arrays(tree), float(lam))
    return TrialResult(float(t_real), int(steps), float(t_root), int(last))


def run_excursion_budget(tree, lam, t, rng, check=True):
    """Run until the artificial root has accumulated holding time ``t``.

    Returns ``(field, tau)`` where ``tau`` is the elapsed real time.  With
    ``check`` the identity ``tau == sum_x pi(x) L^x`` is verified.
    """
    _check(lam)
    if not t > 0:
        raise ValidationError(f"excursion budget must be > 0, got {t}")
    occ = np.zeros(tree.size)
    tau, _ = _kernels.budget(rng, *_arrays(tree), float(lam), float(t), occ)
    pi = stationary_weights(tree, lam)
    values = occ / pi
    values[0] = t
    if check:
        total = float(np.dot(pi, values))
        if abs(total - tau) > 1e-9 * tau:
            raise RuntimeError(f"occupation identity broken: tau={tau!r}, sum pi*L={total!r}")
    return LocalTimeField(values, float(t)), float(tau)
