import math

import numpy as np
import pytest
from hypothesis import given

from looptrees import bijections as bj
from looptrees import laws, metric
from looptrees import planetree as pt
from looptrees.errors import HullConstraint

from conftest import plane_trees


def tree(*seq):
    return pt.from_preorder_degrees(seq)


def test_single_vertex_both_ways():
    one = tree(0)
    assert bj.js_forward(pt.as_two_type(one)) == one
    assert bj.js_inverse(one).tree == one


def test_one_black_with_two_whites():
    # white root, one black child, two white grandchildren
    image = bj.js_forward(pt.as_two_type(tree(1, 2, 0, 0)))
    assert sorted(image.degrees.tolist()) == [0, 0, 0, 3]
    assert image.degrees[0] == 3


@pytest.mark.parametrize("n", range(1, 10))
def test_round_trip_exhaustive(n):
    for t in pt.enumerate_trees(n):
        tt = pt.as_two_type(t)
        s = bj.js_forward(tt)
        assert s.size == t.size
        assert bj.js_inverse(s).tree == t


def test_forward_is_a_bijection_per_size():
    for n in range(1, 9):
        images = {bj.js_forward(pt.as_two_type(t)) for t in pt.enumerate_trees(n)}
        assert len(images) == pt.catalan(n - 1)


@given(plane_trees(max_size=80))
def test_leaves_are_whites(t):
    tt = pt.as_two_type(t)
    s = bj.js_forward(tt)
    assert s.leaves == tt.n_white
    assert bj.js_inverse(s).tree == t


def test_leaves_are_whites_on_sampled_trees():
    sampler = pt.ConditionedSampler(laws.nu_law(), 300)
    for row in sampler.sample_batch(pt.stream(1), 2000):
        t = pt.as_two_type(pt.PlaneTree(row))
        assert bj.js_forward(t).leaves == t.n_white


@pytest.mark.parametrize("a", [0.2, 0.5, 0.8])
def test_pushforward_identity(a):
    for n in range(1, 8):
        for t in pt.enumerate_trees(n):
            tt = pt.as_two_type(t)
            k = t.degrees
            two_type = math.prod(laws.mu_white(a, int(j)) for j in k[tt.is_white]) * math.prod(
                laws.mu_black(int(j)) for j in k[~tt.is_white])
            one_type = math.prod(laws.nu(a, int(j)) for j in bj.js_forward(tt).degrees)
            assert two_type == pytest.approx(one_type, rel=1e-12)


def test_nu_is_pushforward_mixture():
    # nu_0 = 1 - xi and nu_k = xi mu_black(k - 1)
    for a in (0.2, 0.5, 0.8):
        x = laws.xi(a)
        assert laws.nu(a, 0) == pytest.approx(1 - x, rel=1e-13)
        for k in (1, 2, 7, 40):
            assert laws.nu(a, k) == pytest.approx(x * laws.mu_black(k - 1), rel=1e-12)


def test_loop_examples():
    g = bj.loop_of(tree(0))
    assert g.vertex_count == 1 and g.edges.size == 0
    g = bj.loop_of(tree(2, 0, 0))
    assert g.edge_multiset() == [(0, 1), (0, 2), (1, 2)]
    g = bj.loop_of(tree(1, 0))
    assert g.edge_multiset() == [(0, 1), (0, 1)]


def test_loop_bar_examples():
    assert bj.loop_bar_of(tree(0)).vertex_count == 1
    g = bj.loop_bar_of(tree(2, 0, 0))
    assert g.vertex_count == 2
    assert g.edge_multiset() == [(0, 1), (0, 1)]


def test_boundary_examples():
    g = bj.boundary_from_components(pt.as_two_type(tree(1, 0)))
    assert g.vertex_count == 1
    assert g.edge_multiset() == [(0, 0)]
    g = bj.boundary_from_components(pt.as_two_type(tree(1, 2, 0, 0)))
    assert g.vertex_count == 3
    assert g.edge_multiset() == [(0, 1), (0, 2), (1, 2)]
    assert g.cycle_lengths.tolist() == [3]
    with pytest.raises(HullConstraint):
        bj.boundary_from_components(pt.as_two_type(tree(0)))


@given(plane_trees(min_size=2, max_size=60))
def test_boundary_perimeter(t):
    tt = pt.as_two_type(t)
    g = bj.boundary_from_components(tt)
    assert g.perimeter == t.size - 1
    assert g.vertex_count == tt.n_white


@given(plane_trees(max_size=60))
def test_loop_degrees_count_cycles(t):
    g = bj.loop_of(t)
    through = np.zeros(t.size, np.int64)
    for v in range(t.size):
        through[v] = int(t.degrees[v] > 0) + int(v > 0)
    assert np.array_equal(g.degree(), 2 * through)


def _distance_match(t):
    tt = pt.as_two_type(t)
    s, labels = bj.js_forward_labeled(tt)
    rank = np.cumsum(tt.is_white) - 1
    perm = rank[labels[bj.loop_bar_labels(s)]]
    db = bj.boundary_from_components(tt).distance_matrix()
    dl = bj.loop_bar_of(s).distance_matrix()
    return np.array_equal(db[np.ix_(perm, perm)], dl)


@pytest.mark.parametrize("n", range(2, 9))
def test_boundary_is_loop_bar_exhaustive(n):
    assert all(_distance_match(t) for t in pt.enumerate_trees(n))


@given(plane_trees(min_size=2, max_size=120))
def test_boundary_is_loop_bar_random(t):
    assert _distance_match(t)


@given(plane_trees(max_size=50))
def test_loop_bar_distances_close_to_loop(s):
    # a loop-bar vertex is the class of a leaf; compare distances between leaves
    h = pt.height(s)
    leaves = bj.loop_bar_labels(s)
    d_loop = bj.loop_of(s).distance_matrix()[np.ix_(leaves, leaves)]
    d_bar = bj.loop_bar_of(s).distance_matrix()
    assert np.max(np.abs(d_loop - d_bar)) <= 2 * h
    assert abs(metric.diameter(bj.loop_of(s)) - metric.diameter(bj.loop_bar_of(s))) <= 2 * h
