"""Galton-Watson trees truncated at depth n, stored as flat breadth-first arrays.

Node 0 is the artificial root (depth -1), node 1 is the root of the tree
(depth 0).  Nodes are numbered breadth first with children in planar order,
so the children of every node, and every generation, occupy a contiguous
index range.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import RejectionBudgetExceeded, ValidationError

ARTIFICIAL_ROOT = 0
ROOT = 1

_HEADER = "# gwcover-tree v1"


@dataclass(frozen=True)
class OffspringSpec:
    """Finite-support offspring law ``pmf[k] = P(nu = k)``."""

    pmf: tuple

    def __post_init__(self):
        pmf = tuple(float(p) for p in self.pmf)
        object.__setattr__(self, "pmf", pmf)
        if len(pmf) == 0:
            raise ValidationError("offspring pmf is empty")
        if any(p < 0 or not math.isfinite(p) for p in pmf):
            raise ValidationError(f"offspring pmf has a negative or non-finite entry: {pmf}")
        if abs(math.fsum(pmf) - 1.0) > 1e-12:
            raise ValidationError(f"offspring pmf sums to {math.fsum(pmf)!r}, not 1")
        if self.m <= 1.0:
            raise ValidationError(f"offspring mean m={self.m!r} is not supercritical (need m > 1)")

    @property
    def m(self):
        return math.fsum(k * p for k, p in enumerate(self.pmf))

    @property
    def var(self):
        m = self.m
        return math.fsum((k - m) ** 2 * p for k, p in enumerate(self.pmf))

    def extinction_by(self, n):
        """P(Z_n = 0), by iterating the generating function n times."""
        q = 0.0
        for _ in range(n):
            q = math.fsum(p * q**k for k, p in enumerate(self.pmf))
        return q

    @classmethod
    def binomial(cls, k, p):
        return cls(tuple(math.comb(k, j) * p**j * (1 - p) ** (k - j) for j in range(k + 1)))

    @classmethod
    def regular(cls, k):
        return cls(tuple([0.0] * k + [1.0]))


@dataclass(frozen=True, eq=False)
class TreeArena:
    """Immutable rooted tree in flat storage.

    Attributes
    ----------
    parent : (N,) int64
        Parent index, -1 for the artificial root.
    depth : (N,) int32
        Height of each node; -1 for the artificial root.
    child_start : (N,) int64
        Index of the first child (meaningless when ``num_children == 0``).
    num_children : (N,) int32
        ``nu_x`` in the truncated tree; zero at depth n.
    gen_start : (n + 2,) int64
        Generation k occupies ``gen_start[k]:gen_start[k + 1]``.
    n : int
        Truncation depth.
    """

    parent: np.ndarray
    depth: np.ndarray
    child_start: np.ndarray
    num_children: np.ndarray
    gen_start: np.ndarray
    n: int
    rejections: int = field(default=0, compare=False)

    def __post_init__(self):
        for name in ("parent", "depth", "child_start", "num_children", "gen_start"):
            getattr(self, name).flags.writeable = False

    @property
    def size(self):
        """Number of nodes including the artificial root."""
        return int(self.parent.shape[0])

    @property
    def z(self):
        """Generation sizes Z_0..Z_n."""
        return np.diff(self.gen_start)

    def generation(self, k):
        return np.arange(self.gen_start[k], self.gen_start[k + 1])

    def children(self, x):
        s = int(self.child_start[x])
        return range(s, s + int(self.num_children[x]))

    def ancestor_at(self, x, k):
        """Ancestor of node(s) ``x`` at generation ``k`` (``k <= depth``)."""
        x = np.array(x, dtype=np.int64, copy=True)
        scalar = x.ndim == 0
        x = np.atleast_1d(x)
        d = self.depth[x]
        if np.any(d < k):
            raise ValueError(f"generation {k} is below the depth of some node")
        for _ in range(int(d.max()) - k if x.size else 0):
            up = self.depth[x] > k
            x[up] = self.parent[x[up]]
        return int(x[0]) if scalar else x

    def subtree_counts(self, k=None):
        """Z_k^x for every node x: number of generation-k descendants (k defaults to n)."""
        k = self.n if k is None else k
        cnt = np.zeros(self.size, dtype=np.int64)
        cnt[self.gen_start[k]:self.gen_start[k + 1]] = 1
        for g in range(k, -1, -1):
            idx = self.generation(g)
            np.add.at(cnt, self.parent[idx], cnt[idx])
        return cnt

    def truncate(self, k):
        """The same planar tree chopped at height k <= n."""
        if not 0 <= k <= self.n:
            raise ValidationError(f"cannot truncate depth-{self.n} tree at {k}")
        stop = int(self.gen_start[k + 1])
        nch = self.num_children[:stop].copy()
        nch[self.gen_start[k]:stop] = 0
        return TreeArena.from_child_counts(nch[1:], rejections=self.rejections)

    @classmethod
    def from_child_counts(cls, counts, rejections=0):
        """Build from breadth-first child counts of the real vertices (root first).

        The depth n is the depth of the last vertex; vertices at depth n must
        have zero children.
        """
        counts = np.asarray(counts, dtype=np.int64)
        if counts.ndim != 1 or counts.size == 0 or np.any(counts < 0):
            raise ValidationError("child counts must be a nonempty sequence of nonnegative integers")
        if 1 + int(counts.sum()) != counts.size:
            raise ValidationError(
                f"{counts.size} vertices but child counts sum to {int(counts.sum())}"
            )
        size = counts.size + 1
        nch = np.empty(size, dtype=np.int32)
        nch[0] = 1
        nch[1:] = counts
        cstart = np.empty(size, dtype=np.int64)
        cstart[0] = 1
        cstart[1:] = 2 + np.concatenate(([0], np.cumsum(counts)[:-1]))
        parent = np.empty(size, dtype=np.int64)
        parent[0] = -1
        parent[1:] = np.repeat(np.arange(size, dtype=np.int64), nch)
        depth = np.empty(size, dtype=np.int32)
        depth[0] = -1
        gen_start = [1]
        lo, hi = 1, 2
        d = 0
        while lo < size:
            depth[lo:hi] = d
            gen_start.append(hi)
            nxt = hi + int(nch[lo:hi].sum())
            if nxt == hi:
                break
            lo, hi = hi, nxt
            d += 1
        if hi != size:
            raise ValidationError("child counts do not describe a single breadth-first tree")
        n = d
        cstart[nch == 0] = 0
        return cls(
            parent=parent,
            depth=depth,
            child_start=cstart,
            num_children=nch,
            gen_start=np.asarray(gen_start, dtype=np.int64),
            n=n,
            rejections=rejections,
        )


def regular_tree(k, n):
    """Deterministic k-ary tree of depth n."""
    counts = np.concatenate([np.full(k**g, k, dtype=np.int64) for g in range(n)] + [np.zeros(k**n, dtype=np.int64)])
    return TreeArena.from_child_counts(counts)


def sample_tree(spec, n, rng, max_attempts=10_000):
    """GW tree with offspring law ``spec`` truncated at depth ``n``, conditioned on Z_n >= 1.

    Conditioning is by rejection; the number of rejected draws is kept on
    ``tree.rejections``.
    """
    if n < 0:
        raise ValidationError(f"depth n must be >= 0, got {n}")
    pmf = np.asarray(spec.pmf)
    support = np.arange(pmf.size)
    for attempt in range(max_attempts):
        gens = []
        width = 1
        for _ in range(n):
            nu = rng.choice(support, size=width, p=pmf)
            gens.append(nu)
            width = int(nu.sum())
            if width == 0:
                break
        if width == 0:
            continue
        gens.append(np.zeros(width, dtype=np.int64))
        return TreeArena.from_child_counts(np.concatenate(gens), rejections=attempt)
    q = spec.extinction_by(n)
    raise RejectionBudgetExceeded(
        f"no tree with Z_{n} > 0 in {max_attempts} draws; estimated P(Z_{n} = 0) = {q:.6g}"
    )


def sigma_sq(lam, k):
    """Resistance from the artificial root to generation k: (lam^(k+1) - 1)/(lam - 1)."""
    if lam <= 1:
        raise ValidationError(f"bias lambda must be > 1, got {lam}")
    k = np.asarray(k)
    out = (np.power(float(lam), k + 1.0) - 1.0) / (lam - 1.0)
    return float(out) if out.ndim == 0 else out


def effective_resistance(tree, lam, x, y):
    """Sum of lam^|z| over the edges (z, parent z) on the path from x to y."""
    r = 0.0
    depth, parent = tree.depth, tree.parent
    while x != y:
        if depth[x] >= depth[y]:
            r += lam ** int(depth[x])
            x = int(parent[x])
        else:
            r += lam ** int(depth[y])
            y = int(parent[y])
    return r


def stationary_weight(tree, lam, x):
    """pi_n(x) = (lam + nu_x) / lam^(|x|+1), scaled so the artificial root has weight 1."""
    if x == ARTIFICIAL_ROOT:
        return 1.0
    return (lam + int(tree.num_children[x])) / lam ** (int(tree.depth[x]) + 1)


def stationary_weights(tree, lam):
    w = (lam + tree.num_children.astype(float)) / np.power(float(lam), tree.depth + 1.0)
    w[ARTIFICIAL_ROOT] = 1.0
    return w


def transition_probs(tree, lam, x):
    """(to_parent, to_each_child) jump probabilities out of x."""
    if x == ARTIFICIAL_ROOT:
        return 0.0, 1.0
    nu = int(tree.num_children[x])
    return lam / (lam + nu), 1.0 / (lam + nu)


@dataclass(frozen=True)
class GenStats:
    z: np.ndarray
    s_n: float
    w_hat: float
    sigma_sq: np.ndarray
    lam: float
    m: float

    @property
    def n(self):
        return len(self.z) - 1

    @property
    def z_n(self):
        return int(self.z[-1])


def gen_stats(tree, lam, m):
    z = tree.z
    n = tree.n
    s_n = math.fsum(int(zi) / lam**i for i, zi in enumerate(z))
    return GenStats(
        z=z,
        s_n=s_n,
        w_hat=int(z[-1]) / m**n,
        sigma_sq=sigma_sq(lam, np.arange(n + 1)),
        lam=float(lam),
        m=float(m),
    )


@dataclass(frozen=True)
class RegularityReport:
    """Achieved values against the bounds of the three tree-regularity conditions.

    ``ratio_sum`` is sum(Z_0..Z_n)/Z_n against ``bound_sum`` (=C);
    ``kesten_gap`` is |Z_n - m^n W| against m^(n/2) log n;
    ``ancestor_sq_sum`` is sum over generation ``ancestor_gen`` of (Z_n^x)^2
    against Z_n^(1+eps).
    """

    ratio_sum: float
    bound_sum: float
    kesten_gap: float
    bound_kesten: float
    ancestor_gen: int
    ancestor_sq_sum: int
    bound_ancestor: float

    @property
    def passes_sum(self):
        return self.ratio_sum <= self.bound_sum

    @property
    def passes_kesten(self):
        return self.kesten_gap <= self.bound_kesten

    @property
    def passes_ancestor(self):
        return self.ancestor_sq_sum <= self.bound_ancestor

    def rows(self):
        return [
            ("sum_generations", self.ratio_sum, self.bound_sum, self.passes_sum),
            ("kesten_stigum_gap", self.kesten_gap, self.bound_kesten, self.passes_kesten),
            ("ancestor_square_sum", float(self.ancestor_sq_sum), self.bound_ancestor, self.passes_ancestor),
        ]


def ancestor_generation(n, c):
    """n - floor(c log n), clamped to [0, n]."""
    if n < 2:
        return 0
    return max(n - math.floor(c * math.log(n)), 0)


def regularity_report(tree, m, lam, c, eps, C=None, w=None):
    """Check the three Galton-Watson regularity bounds on one tree.

    ``w`` defaults to the plug-in Z_n/m^n, which makes the Kesten-Stigum gap
    identically zero; pass an external estimate of W to make it informative.
    """
    if m <= 1:
        raise ValidationError(f"mean offspring m={m} must exceed 1")
    if lam <= 1:
        raise ValidationError(f"bias lambda={lam} must exceed 1")
    if c <= 3 / math.log(lam):
        raise ValidationError(f"c={c} must exceed 3/log(lambda)={3 / math.log(lam):.6g}")
    n = tree.n
    if n < 2:
        raise ValidationError(f"regularity report needs n >= 2, got {n}")
    z = tree.z
    z_n = int(z[-1])
    C = 4 * m / (m - 1) if C is None else C
    w = z_n / m**n if w is None else w
    r = ancestor_generation(n, c)
    counts = tree.subtree_counts()[tree.generation(r)]
    return RegularityReport(
        ratio_sum=int(z.sum()) / z_n,
        bound_sum=C,
        kesten_gap=abs(z_n - m**n * w),
        bound_kesten=m ** (n / 2) * math.log(n),
        ancestor_gen=r,
        ancestor_sq_sum=int((counts**2).sum()),
        bound_ancestor=z_n ** (1 + eps),
    )


def write_tree(tree, path, lam, seed):
    """Serialize as ``id parent depth num_children`` lines under a versioned header."""
    lines = [f"{_HEADER} lambda={float(lam)!r} n={tree.n} seed={seed}"]
    lines.extend(
        f"{i} {p} {d} {c}"
        for i, (p, d, c) in enumerate(zip(tree.parent.tolist(), tree.depth.tolist(), tree.num_children.tolist()))
    )
    text = "\n".join(lines) + "\n"
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def read_tree(path):
    """Inverse of :func:`write_tree`; returns ``(tree, header_fields)``."""
    with open(path) as fh:
        header = fh.readline().rstrip("\n")
        if not header.startswith(_HEADER):
            raise ValidationError(f"{path}: not a gwcover-tree v1 file")
        meta = dict(tok.split("=", 1) for tok in header[len(_HEADER):].split())
        rows = np.loadtxt(fh, dtype=np.int64, ndmin=2)
    if rows.shape[0] < 2 or rows[0, 1] != -1 or rows[0, 2] != -1:
        raise ValidationError(f"{path}: first node must be the artificial root")
    if not np.array_equal(rows[:, 0], np.arange(rows.shape[0])):
        raise ValidationError(f"{path}: node ids must be 0..N-1 in order")
    tree = TreeArena.from_child_counts(rows[1:, 3])
    if not (np.array_equal(tree.parent, rows[:, 1]) and np.array_equal(tree.depth, rows[:, 2])):
        raise ValidationError(f"{path}: parent/depth columns disagree with breadth-first order")
    meta = {
        "lambda": float(meta["lambda"]),
        "n": int(meta["n"]),
        "seed": meta.get("seed"),
    }
    return tree, meta
