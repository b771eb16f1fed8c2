import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gwcover.errors import RejectionBudgetExceeded, ValidationError
from gwcover.tree import (
    ARTIFICIAL_ROOT,
    ROOT,
    OffspringSpec,
    TreeArena,
    effective_resistance,
    gen_stats,
    read_tree,
    regular_tree,
    regularity_report,
    sample_tree,
    sigma_sq,
    stationary_weight,
    stationary_weights,
    transition_probs,
    write_tree,
)

BIN = OffspringSpec.binomial(2, 0.75)


@st.composite
def trees(draw, max_depth=5):
    pmf = draw(st.sampled_from([(0, 0, 1.0), BIN.pmf, (0.1, 0.2, 0.3, 0.4), (0, 0, 0, 1.0)]))
    n = draw(st.integers(0, max_depth))
    seed = draw(st.integers(0, 2**32 - 1))
    return sample_tree(OffspringSpec(pmf), n, np.random.default_rng(seed))


def test_offspring_validation():
    assert BIN.m == pytest.approx(1.5)
    assert BIN.var == pytest.approx(2 * 0.75 * 0.25)
    with pytest.raises(ValidationError):
        OffspringSpec((0, 1.0))  # m = 1
    with pytest.raises(ValidationError):
        OffspringSpec((0.5, 0.6))
    with pytest.raises(ValidationError):
        OffspringSpec((-0.1, 0, 1.1))


def test_binary_generation_sizes():
    tree = sample_tree(OffspringSpec((0, 0, 1)), 3, np.random.default_rng(0))
    assert tree.z.tolist() == [1, 2, 4, 8]
    assert tree.rejections == 0


def test_depth_zero_tree():
    tree = sample_tree(BIN, 0, np.random.default_rng(0))
    assert tree.size == 2
    assert tree.z.tolist() == [1]
    assert tree.depth.tolist() == [-1, 0]
    assert tree.num_children.tolist() == [1, 0]


def test_conditioned_growth():
    rng = np.random.default_rng(11)
    z = [sample_tree(BIN, 10, rng).z[-1] for _ in range(10_000)]
    # E[Z_n | Z_n > 0] = m^n / P(Z_n > 0) >= m^n
    assert np.mean(z) >= 1.5**10


def test_unconditioned_mean_matches_martingale():
    rng = np.random.default_rng(5)
    pmf = np.array(BIN.pmf)
    n = 6
    tot = []
    for _ in range(10_000):
        w = 1
        for _ in range(n):
            w = int(rng.choice(3, size=w, p=pmf).sum()) if w else 0
        tot.append(w)
    tot = np.array(tot, dtype=float)
    se = tot.std(ddof=1) / math.sqrt(tot.size)
    assert abs(tot.mean() - 1.5**n) <= 3 * se


def test_rejection_budget_names_extinction_probability():
    spec = OffspringSpec((0.6, 0, 0, 0, 0.4))  # m = 1.6, P(extinction) ~ 0.69
    q = spec.extinction_by(30)
    assert 0.6 < q < 0.7
    rng = np.random.default_rng(0)
    with pytest.raises(RejectionBudgetExceeded, match=rf"P\(Z_30 = 0\) = {q:.6g}"):
        for _ in range(50):  # some draw dies on its single attempt
            sample_tree(spec, 30, rng, max_attempts=1)


def test_arena_layout_invariants():
    tree = sample_tree(BIN, 8, np.random.default_rng(3))
    assert np.count_nonzero(tree.depth == -1) == 1
    assert tree.parent[ARTIFICIAL_ROOT] == -1
    assert tree.num_children[ARTIFICIAL_ROOT] == 1 and tree.child_start[ARTIFICIAL_ROOT] == ROOT
    assert np.all(tree.depth[1:] == tree.depth[tree.parent[1:]] + 1)
    for x in range(tree.size):
        for c in tree.children(x):
            assert tree.parent[c] == x
    covered = np.concatenate([tree.generation(k) for k in range(tree.n + 1)])
    assert covered.tolist() == list(range(1, tree.size))
    assert np.all(tree.num_children[tree.generation(tree.n)] == 0)
    assert tree.z[-1] >= 1
    with pytest.raises(ValueError):
        tree.parent[0] = 3


def test_from_child_counts_rejects_bad_input():
    with pytest.raises(ValidationError):
        TreeArena.from_child_counts([2, 0])
    with pytest.raises(ValidationError):
        TreeArena.from_child_counts([])


def test_truncate_matches_direct_construction():
    tree = sample_tree(BIN, 9, np.random.default_rng(8))
    small = tree.truncate(5)
    assert small.n == 5
    assert small.z.tolist() == tree.z[:6].tolist()
    assert np.array_equal(small.parent, tree.parent[: small.size])


@pytest.mark.parametrize("lam,k,expected", [(2, 0, 1), (2, 3, 15), (3, 2, 13)])
def test_sigma_sq_values(lam, k, expected):
    assert sigma_sq(lam, k) == expected


@given(st.floats(1.01, 5.0), st.integers(1, 30))
def test_sigma_sq_increments(lam, k):
    assert sigma_sq(lam, k) - sigma_sq(lam, k - 1) == pytest.approx(lam**k, rel=1e-10)


def test_effective_resistance_examples():
    tree = regular_tree(2, 3)
    assert effective_resistance(tree, 2.0, 5, 5) == 0
    leaf2 = int(tree.generation(2)[0])
    assert effective_resistance(tree, 2.0, ARTIFICIAL_ROOT, leaf2) == 7 == sigma_sq(2, 2)
    a, b = tree.generation(1)
    assert effective_resistance(tree, 2.0, int(a), int(b)) == 4


@settings(max_examples=30, deadline=None)
@given(trees(), st.floats(1.1, 4.0))
def test_resistance_to_artificial_root(tree, lam):
    for x in range(1, tree.size):
        r = effective_resistance(tree, lam, ARTIFICIAL_ROOT, x)
        assert r == pytest.approx(sigma_sq(lam, int(tree.depth[x])), rel=1e-9)


@settings(max_examples=30, deadline=None)
@given(trees(), st.floats(1.1, 4.0))
def test_transition_rows_and_detailed_balance(tree, lam):
    pi = stationary_weights(tree, lam)
    for x in range(1, tree.size):
        up, down = transition_probs(tree, lam, x)
        nu = int(tree.num_children[x])
        assert up + nu * down == 1.0 or math.isclose(up + nu * down, 1.0, abs_tol=1e-15)
        p = int(tree.parent[x])
        forward = pi[x] * up
        backward = pi[p] * transition_probs(tree, lam, p)[1]
        assert forward == pytest.approx(backward, rel=1e-12)
        assert forward == pytest.approx(lam ** -int(tree.depth[x]), rel=1e-12)


def test_stationary_weight_examples():
    tree = regular_tree(2, 3)
    assert stationary_weight(tree, 2.0, ROOT) == 2.0
    leaf = int(tree.generation(3)[0])
    assert stationary_weight(tree, 2.0, leaf) == 0.125
    assert stationary_weight(tree, 2.0, ARTIFICIAL_ROOT) == 1.0


def test_gen_stats_examples():
    st1 = gen_stats(regular_tree(2, 1), 2.0, 2.0)
    assert st1.s_n == 2 and st1.w_hat == 1
    for n in (0, 3, 7):
        s = gen_stats(regular_tree(2, n), 2.0, 2.0)
        assert s.w_hat == 1
        assert s.s_n == n + 1
        assert s.z[0] == 1 and s.sigma_sq[0] == 1
        assert np.all(np.diff(s.sigma_sq) > 0)


def test_regularity_binary():
    tree = regular_tree(2, 8)
    c = 1.01 * 3 / math.log(2)
    rep = regularity_report(tree, 2.0, 2.0, c, 0.5)
    assert rep.kesten_gap == 0 and rep.passes_kesten
    r = rep.ancestor_gen
    assert rep.ancestor_sq_sum == 2**r * 4 ** (8 - r)
    # explicit ancestor generation away from the clamp
    rep = regularity_report(regular_tree(2, 12), 2.0, 2.0, 4.4, 0.5)
    assert rep.ancestor_gen == 12 - math.floor(4.4 * math.log(12))
    assert rep.ancestor_sq_sum == 2**rep.ancestor_gen * 4 ** (12 - rep.ancestor_gen)
    assert rep.ratio_sum == pytest.approx((2**13 - 1) / 2**12)
    assert rep.passes_sum


def test_regularity_hypothesis_gates():
    tree = regular_tree(2, 4)
    with pytest.raises(ValidationError):
        regularity_report(tree, 1.0, 2.0, 5.0, 0.5)
    with pytest.raises(ValidationError):
        regularity_report(tree, 2.0, 2.0, 1.0, 0.5)


def test_serialization_round_trip(tmp_path):
    tree = sample_tree(BIN, 7, np.random.default_rng(2))
    path = tmp_path / "t.txt"
    write_tree(tree, path, 2.0, 99)
    lines = path.read_text().splitlines()
    assert lines[0] == "# gwcover-tree v1 lambda=2.0 n=7 seed=99"
    assert lines[1] == "0 -1 -1 1"
    assert lines[2].startswith("1 0 0 ")
    back, meta = read_tree(path)
    assert meta == {"lambda": 2.0, "n": 7, "seed": "99"}
    for name in ("parent", "depth", "child_start", "num_children", "gen_start"):
        assert np.array_equal(getattr(back, name), getattr(tree, name))


def test_read_tree_rejects_shuffled(tmp_path):
    path = tmp_path / "t.txt"
    path.write_text("# gwcover-tree v1 lambda=2.0 n=1 seed=0\n0 -1 -1 1\n1 0 0 2\n2 1 1 0\n3 0 1 0\n")
    with pytest.raises(ValidationError):
        read_tree(path)
