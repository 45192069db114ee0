import json

import numpy as np
import pytest

from recordwalk.record import GraphTreeView, build_record_graph
from recordwalk.samplers import SamplerBudget, sample_gw
from recordwalk.seq import CensoredError, sample_window, two_point
from recordwalk.trees import (EQUAL, PRECEDES, SUCCEEDS, OrderedTree, ancestors, ball, ball_key,
                              canonical_encode, level_offset, lukasiewicz_sum_check, materialize,
                              minimal_descendant, parent_shift, pred_a, rls_compare, rls_sorted,
                              succ_b, succession_line, tree_dumps, tree_from_parents, tree_to_dot,
                              undirected_ball_key)
from recordwalk.trees import _run

import oracles

# 0 has children 1, 2, 3; 1 has 4, 5; 3 has 6
PARENTS = [None, 0, 0, 0, 1, 1, 3]


@pytest.fixture
def t():
    return tree_from_parents(PARENTS)


def _random_trees(n=30, seed=0):
    g = np.random.default_rng(seed)
    b = SamplerBudget(node_cap=400, height_cap=64)
    for _ in range(n):
        yield sample_gw({0: 0.45, 1: 0.2, 2: 0.2, 3: 0.15}, b, g)


def _children_map(tree):
    return {u: list(tree.children(u)) for u in tree.nodes()}


def test_parent_shift_and_ancestors(t):
    assert parent_shift(t, 4) == 1
    assert parent_shift(t, 0) == 0
    assert ancestors(t, 6) == [6, 3, 0]
    assert ancestors(t, 6, limit=1) == [6, 3]


def test_level_offset(t):
    assert level_offset(t, 4, 0) == -2
    assert level_offset(t, 0, 4) == 2
    assert level_offset(t, 4, 6) == 0
    assert level_offset(t, 2, 2) == 0


def test_rls_order_example(t):
    # post-order: 4 5 1 2 6 3 0
    assert rls_sorted(t, 0) == [4, 5, 1, 2, 6, 3, 0]
    assert rls_compare(t, 4, 0) == PRECEDES
    assert rls_compare(t, 0, 4) == SUCCEEDS
    assert rls_compare(t, 2, 6) == PRECEDES
    assert rls_compare(t, 5, 5) == EQUAL
    assert minimal_descendant(t, 0) == 4


def test_rls_compare_matches_post_order():
    for tree in _random_trees():
        order = oracles.post_order(_children_map(tree), 0)
        rank = {u: k for k, u in enumerate(order)}
        assert rls_sorted(tree, 0) == order
        nodes = list(tree.nodes())[:25]
        for u in nodes:
            for v in nodes:
                want = EQUAL if u == v else (PRECEDES if rank[u] < rank[v] else SUCCEEDS)
                assert rls_compare(tree, u, v) == want


def test_immediate_neighbours_match_post_order():
    for tree in _random_trees(seed=1):
        order = oracles.post_order(_children_map(tree), 0)
        for k, u in enumerate(order):
            assert succ_b(tree, u) == (order[k - 1] if k > 0 else None)
            assert pred_a(tree, u) == (order[k + 1] if k + 1 < len(order) else None)


def test_succession_line_is_a_window_of_post_order():
    for tree in _random_trees(seed=2):
        order = oracles.post_order(_children_map(tree), 0)
        for k, u in enumerate(order[:20]):
            line = succession_line(tree, u, max_steps=5)
            want = order[max(k - 5, 0):k + 6]
            assert line.as_list() == want
            assert line.at(0) == u
            if line.forward:
                assert line.at(1) == line.forward[0]


def test_succession_line_matches_step_oracle():
    for tree in _random_trees(seed=3):
        for u in list(tree.nodes())[:10]:
            for steps in (0, 1, 3, 50):
                line = succession_line(tree, u, max_steps=steps)
                fwd, fend = _run(tree, u, pred_a, steps)
                back, bend = _run(tree, u, succ_b, steps)
                assert (line.forward, line.forward_end) == (fwd, fend)
                assert (line.backward, line.backward_end) == (back, bend)


def test_lukasiewicz_on_finite_trees(t):
    assert lukasiewicz_sum_check(t)
    for tree in _random_trees(seed=4):
        assert lukasiewicz_sum_check(tree)
    # the check runs on the component of the given root
    f = tree_from_parents([None, 0, None])
    assert lukasiewicz_sum_check(f, 0)


def test_canonical_keys_ordered_vs_unordered():
    a = tree_from_parents([None, 0, 0, 1])     # first child has the grandchild
    b = tree_from_parents([None, 0, 0, 2])     # second child has it
    assert canonical_encode(a, 0) != canonical_encode(b, 0)
    assert canonical_encode(a, 0, "unordered") == canonical_encode(b, 0, "unordered")
    with pytest.raises(ValueError):
        canonical_encode(a, 0, "sideways")


def _shuffled(tree, g):
    """Same unordered tree with children permuted and node ids relabelled."""
    n = len(tree)
    perm = g.permutation(n)
    out = OrderedTree()
    for _ in range(n):
        out._new(-1, [], None)
    for u in tree.nodes():
        kids = list(tree.children(u))
        g.shuffle(kids)
        out._children[perm[u]] = [int(perm[c]) for c in kids]
        for c in kids:
            out._parent[perm[c]] = int(perm[u])
    out.root = int(perm[tree.root])
    return out


def test_unordered_key_is_isomorphism_invariant():
    g = np.random.default_rng(5)
    for tree in _random_trees(seed=5):
        other = _shuffled(tree, g)
        assert canonical_encode(tree, 0, "unordered") == canonical_encode(other, other.root, "unordered")
        for u in list(tree.nodes())[:5]:
            # find the image of u by matching keys of rooted balls
            key = ball_key(tree, u, 2, "unordered")
            assert any(ball_key(other, w, 2, "unordered") == key for w in other.nodes())


def test_ordered_key_distinguishes_distinct_shapes():
    seen = {}
    for tree in _random_trees(n=60, seed=6):
        key = canonical_encode(tree, 0)
        shape = json.dumps(_nested(tree, 0))
        assert seen.setdefault(key, shape) == shape


def _nested(tree, u):
    return [_nested(tree, c) for c in tree.children(u)]


def test_ball_and_keys(t):
    top, dist, kids = ball(t, 4, 1)
    assert top == 1 and dist == {4: 0, 1: 1}
    assert kids[1] == [4]
    top, dist, kids = ball(t, 4, 2)
    assert top == 0 and set(dist) == {4, 1, 5, 0}
    assert ball_key(t, 4, 0) == b"(*)"
    assert ball_key(t, 0, 1) == b"(*()()())"


def test_undirected_key_forgets_direction():
    path_down = tree_from_parents([None, 0, 1])
    star = tree_from_parents([None, 0, 0])
    assert undirected_ball_key(path_down, 1, 1) == undirected_ball_key(star, 0, 1)


def test_marks_enter_keys():
    a = tree_from_parents([None, 0], marks=[2, -1])
    b = tree_from_parents([None, 0], marks=[1, -1])
    assert ball_key(a, 0, 1) != ball_key(b, 0, 1)
    assert ball_key(a, 0, 1, with_marks=False) == ball_key(b, 0, 1, with_marks=False)


def test_json_round_trip(t):
    back = OrderedTree.from_json(json.loads(tree_dumps(t)))
    assert tree_dumps(back) == tree_dumps(t)
    bad = t.to_json()
    bad["nodes"][4]["parent"] = 2
    with pytest.raises(ValueError):
        OrderedTree.from_json(bad)


def test_dot_export_lists_every_edge(t):
    text = tree_to_dot(t)
    assert text.startswith("digraph tree {")
    assert text.count("->") == len(PARENTS) - 1
    assert "doublecircle" in text


def test_materialize_keeps_structure(t):
    sub = materialize(t, 1, [1, 4, 5])
    assert len(sub) == 3
    assert sub.children(sub.root) == [1, 2]


def test_record_graph_views_follow_position_order():
    # RLS order on record trees is position order
    g0 = np.random.default_rng(7)
    for _ in range(10):
        w = sample_window(two_point(0.5, 0.5), -300, 300, g0)
        view = GraphTreeView(build_record_graph(w), 0)
        try:
            line = succession_line(view, 0, max_steps=40)
        except CensoredError:
            continue
        seq = line.as_list()
        assert seq == list(range(seq[0], seq[0] + len(seq)))
