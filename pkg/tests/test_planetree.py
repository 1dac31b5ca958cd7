import io
import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given

from looptrees import laws
from looptrees import planetree as pt
from looptrees.errors import HullConstraint, InvalidEncoding, Overflow

from conftest import plane_trees


def test_single_vertex():
    t = pt.from_preorder_degrees([0])
    assert t.size == 1
    assert pt.height(t) == 0


def test_cherry():
    t = pt.from_preorder_degrees([2, 0, 0])
    assert t.size == 3
    assert pt.height(t) == 1
    assert t.children_of(0).tolist() == [1, 2]


def test_chain_with_two_leaves():
    # sum 3 = |t| - 1 and every prefix keeps the walk nonnegative
    t = pt.from_preorder_degrees([1, 2, 0, 0])
    assert t.parent.tolist() == [-1, 0, 1, 1]
    assert pt.height(t) == 2


def test_height_of_path():
    assert pt.height(pt.from_preorder_degrees([1, 1, 1, 0])) == 3


@pytest.mark.parametrize("seq", [[], [1], [0, 0], [2, 0], [0, 1], [1, 0, 1, 0], [-1, 2, 0]])
def test_invalid_sequences(seq):
    with pytest.raises(InvalidEncoding):
        pt.from_preorder_degrees(seq)


def test_line_round_trip():
    trees = [pt.from_preorder_degrees(s) for s in ([0], [2, 0, 0], [3, 1, 0, 0, 2, 0, 0])]
    buf = io.StringIO()
    pt.write_trees(trees, buf)
    assert buf.getvalue().splitlines()[2] == "7 3 1 0 0 2 0 0"
    buf.seek(0)
    assert list(pt.read_trees(buf)) == trees


def test_line_size_mismatch():
    with pytest.raises(InvalidEncoding):
        pt.parse_line("4 2 0 0")


@pytest.mark.parametrize("n", range(1, 11))
def test_enumeration_counts_catalan(n):
    trees = list(pt.enumerate_trees(n))
    assert len(trees) == pt.catalan(n - 1) == math.comb(2 * n - 2, n - 1) // n
    assert len(set(trees)) == len(trees)


def test_two_type_census():
    t = pt.as_two_type(pt.from_preorder_degrees([2, 0, 0]))
    assert (t.n_white, t.n_black, t.perimeter) == (1, 2, 2)
    t = pt.as_two_type(pt.from_preorder_degrees([1, 2, 0, 0]))
    assert (t.n_white, t.n_black) == (3, 1)
    t = pt.as_two_type(pt.from_preorder_degrees([0]))
    assert (t.n_white, t.white_weight()) == (1, 1)


def test_hull_needs_two_vertices():
    with pytest.raises(HullConstraint):
        pt.as_two_type(pt.from_preorder_degrees([0]), hull=True)


@given(plane_trees(max_size=60))
def test_two_type_relations(tree):
    t = pt.as_two_type(tree)
    assert t.n_white + t.n_black == t.size
    if t.size >= 2:
        assert t.perimeter == t.size - 1
    assert t.white_weight() == t.size


@given(plane_trees(max_size=60))
def test_children_csr_consistent(tree):
    for v in range(tree.size):
        kids = tree.children_of(v)
        assert kids.size == tree.degrees[v]
        assert np.all(tree.parent[kids] == v)
        assert np.all(np.diff(kids) > 0)


def test_point_mass_at_zero():
    law = laws.point_mass(0)
    assert pt.sample_gw(law, 10, pt.stream(0)).degrees.tolist() == [0]


def test_unconditioned_overflow():
    with pytest.raises(Overflow):
        pt.sample_gw(laws.point_mass(2), 100, pt.stream(0))


def test_conditioned_small_sizes():
    nu = laws.nu_law()
    assert pt.sample_gw_conditioned(nu, 1, 0).degrees.tolist() == [0]
    for seed in range(20):
        assert pt.sample_gw_conditioned(nu, 2, seed).degrees.tolist() == [1, 0]


def test_conditioned_reproducible():
    nu = laws.nu_law()
    a = pt.ConditionedSampler(nu, 500).sample_many(5, seed=11)
    b = pt.ConditionedSampler(nu, 500).sample_many(5, seed=11)
    assert a == b
    assert a != pt.ConditionedSampler(nu, 500).sample_many(5, seed=12)


@pytest.mark.parametrize("method", ["split", "rejection"])
def test_conditioned_valid(method):
    nu = laws.nu_law()
    s = pt.ConditionedSampler(nu, 64)
    rng = pt.stream(3)
    for _ in range(50):
        t = s.sample(rng, method)
        assert t.size == 64
        pt.from_preorder_degrees(t.degrees)


def _shape_zscores(n, draws, method, seed):
    nu = laws.nu_law()
    shapes = list(pt.enumerate_trees(n))
    probs = np.array([pt.shape_probability(t, nu) for t in shapes])
    probs /= probs.sum()
    sampler = pt.ConditionedSampler(nu, n)
    if method == "split":
        rows = sampler.sample_batch(pt.stream(seed), draws)
        counts = Counter(map(tuple, rows.tolist()))
    else:
        rng = pt.stream(seed)
        counts = Counter(sampler.sample(rng, method).key() for _ in range(draws))
    got = np.array([counts.get(t.key(), 0) for t in shapes])
    assert got.sum() == draws
    return (got - draws * probs) / np.sqrt(draws * probs * (1 - probs))


@pytest.mark.parametrize("n", range(3, 8))
def test_split_sampler_exact_distribution(n):
    z = _shape_zscores(n, 10**6, "split", seed=n)
    assert np.max(np.abs(z)) < 4.5


def test_rejection_sampler_distribution():
    z = _shape_zscores(5, 20_000, "rejection", seed=1)
    assert np.max(np.abs(z)) < 4.5


def test_height_scales_like_cube_root():
    # critical nu has tail index 3/2, so heights grow like n^{1/3}
    nu = laws.nu_law()
    heights = []
    for n in (1000, 8000):
        rows = pt.ConditionedSampler(nu, n).sample_batch(pt.stream(5, n), 300)
        heights.append(np.mean([pt.height(pt.PlaneTree(r)) for r in rows]))
    slope = math.log(heights[1] / heights[0]) / math.log(8)
    assert 0.2 < slope < 0.5


def test_overflow_rate_matches_exact_progeny():
    # P(|tree| > cap) from the exact size law against the empirical overflow rate
    from looptrees import exactasym as ea

    nu = laws.nu_law()
    cap = 200
    survive = 1.0 - sum(ea.gw_size_pmf(nu, n) for n in range(1, cap + 1))
    rng = pt.stream(9)
    trials = 20_000
    over = 0
    for _ in range(trials):
        try:
            pt.sample_gw(nu, cap, rng)
        except Overflow:
            over += 1
    sd = math.sqrt(survive * (1 - survive) / trials)
    assert abs(over / trials - survive) < 4 * sd
