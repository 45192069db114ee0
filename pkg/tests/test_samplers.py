import math
from collections import Counter

import numpy as np
import pytest

from recordwalk.samplers import (ERROR, RESAMPLE, SPECIAL, SamplerBudget, TreeOverflow,
                                 canopy_level_law, mekt_bush_sampler, progenitor, regular_tree_ball,
                                 sample_canopy, sample_egwt, sample_ekt, sample_gw, sample_mekt,
                                 sample_sbgw, sample_tgwt, sample_unimodular_mekt)
from recordwalk.seq import CensoredError, joint_mark_law, parse_offspring, size_biased, two_point
from recordwalk.trees import lukasiewicz_sum_check

import oracles


def _budget(**kw):
    return SamplerBudget(**{"node_cap": 20_000, "height_cap": 64, **kw})


def _close(freq, p, n, z=4.5):
    return abs(freq - p) <= z * math.sqrt(max(p * (1 - p), 1e-12) / n) + 1e-12


def test_budget_validation():
    with pytest.raises(ValueError):
        SamplerBudget(node_cap=0)
    with pytest.raises(ValueError):
        SamplerBudget(overflow="shrug")


def test_gw_size_law_matches_hitting_time_formula(rng):
    pi = {0: 0.5, 1: 0.25, 2: 0.25}
    n = 20_000
    sizes = Counter(len(sample_gw(pi, _budget(), rng)) for _ in range(n))
    ref = oracles.gw_size_law(pi, 6)
    for k, p in ref.items():
        assert _close(sizes[k] / n, p, n), (k, sizes[k] / n, p)


def test_gw_trees_are_lukasiewicz(rng):
    for _ in range(50):
        assert lukasiewicz_sum_check(sample_gw({0: 0.5, 2: 0.5}, _budget(), rng))


def test_overflow_policies(rng):
    pi = {0: 0.5, 2: 0.5}
    with pytest.raises(TreeOverflow):
        for _ in range(200):
            sample_gw(pi, _budget(node_cap=3, overflow=ERROR), rng)
    b = _budget(node_cap=3, overflow=RESAMPLE)
    for _ in range(200):
        assert len(sample_gw(pi, b, rng)) <= 3
    assert b.resamples > 0


def test_tgwt_parent_exists_with_probability_m(rng):
    pi = parse_offspring("0:0.7,1:0.2,2:0.1")
    n = 20_000
    has = sum(sample_tgwt(pi, _budget(), rng).parent(0) is not None for _ in range(n))
    assert _close(has / n, pi.mean, n)


def test_tgwt_ancestor_broods_are_size_biased(rng):
    pi = parse_offspring("0:0.7,1:0.2,2:0.1")
    hat = size_biased(pi)
    counts = Counter()
    for _ in range(20_000):
        t = sample_tgwt(pi, _budget(), rng)
        p = t.parent(0)
        if p is not None:
            counts[len(t.children(p))] += 1
    n = sum(counts.values())
    for k, q in hat.items():
        assert _close(counts[k] / n, q, n)


def test_tgwt_needs_subcritical():
    with pytest.raises(ValueError):
        sample_tgwt({0: 0.5, 2: 0.5}, _budget(), np.random.default_rng(0))


def test_sbgw_is_rooted_at_progenitor(rng):
    pi = parse_offspring("0:0.7,1:0.2,2:0.1")
    for _ in range(200):
        t = sample_sbgw(pi, _budget(), rng)
        assert t.parent(t.root) is None
        assert progenitor(t, 0) == t.root


def test_egwt_spine_is_size_biased(rng):
    pi = parse_offspring("0:0.4,1:0.2,2:0.4")
    hat = size_biased(pi)
    counts = Counter()
    n = 10_000
    for _ in range(n):
        t = sample_egwt(pi, _budget(), rng)
        counts[len(t.children(t.parent(t.parent(0))))] += 1
    for k, q in hat.items():
        assert _close(counts[k] / n, q, n)


def test_egwt_spine_is_censored_at_height_cap(rng):
    t = sample_egwt({0: 0.5, 2: 0.5}, _budget(height_cap=3), rng)
    u = 0
    for _ in range(3):
        u = t.parent(u)
    with pytest.raises(CensoredError):
        t.parent(u)


def test_egwt_needs_critical():
    with pytest.raises(ValueError):
        sample_egwt({0: 0.6, 2: 0.4}, _budget(), np.random.default_rng(0))


def test_ekt_has_one_special_child_per_spine_vertex(rng):
    pi = parse_offspring("0:0.4,1:0.2,2:0.4")
    hat = size_biased(pi)
    counts = Counter()
    n = 10_000
    for _ in range(n):
        t = sample_ekt(pi, _budget(), rng)
        kids = t.children(t.root)
        assert sum(t.kind(c) == SPECIAL for c in kids) == 1
        counts[len(kids)] += 1
    for k, q in hat.items():
        assert _close(counts[k] / n, q, n)


def test_mekt_root_joint_law(rng):
    d = two_point(0.4, 0.6)
    joint = joint_mark_law(d)
    counts = Counter()
    n = 20_000
    for _ in range(n):
        t = sample_mekt(d, _budget(), None, rng)
        counts[(t.mark(t.root), len(t.bush_children(t.root)))] += 1
    assert set(counts) <= set(joint)
    for key, p in joint.items():
        assert _close(counts[key] / n, p, n)


def test_mekt_path_child_comes_first(rng):
    t = sample_mekt(two_point(0.4, 0.6), _budget(), None, rng)
    first = t.children(t.root)[0]
    assert t.path_index(first) == -1
    assert t.path_index(t.parent(t.root)) == 1
    assert all(t.path_index(c) is None for c in t.children(t.root)[1:])


def test_mekt_bush_marks(rng):
    sampler = mekt_bush_sampler(two_point(0.4, 0.6))
    for _ in range(100):
        bush = sampler(rng)
        assert all(bush.mark(u) == -1 for u in bush.nodes() if u != bush.root)


def test_mekt_needs_positive_mean():
    with pytest.raises(ValueError):
        sample_mekt(two_point(0.5, 0.5), _budget(), None, np.random.default_rng(0))


def test_unimodular_root_is_size_biased(rng):
    d = two_point(0.1, 0.9)
    sizes = Counter()
    plain = Counter()
    n = 5000
    for _ in range(n):
        t = sample_unimodular_mekt(d, _budget(), rng, size_cap=16)
        assert t.root in t.center_nodes
        sizes[len(t.center_nodes)] += 1
    sampler = mekt_bush_sampler(d)
    for _ in range(n):
        plain[len(sampler(rng))] += 1
    # [DERIVED] the accepted size law is the size-biased bush size law
    mean_size = sum(k * c for k, c in plain.items()) / n
    for k in (1, 2, 3):
        want = k * plain[k] / n / mean_size
        assert abs(sizes[k] / n - want) < 0.03


def test_unimodular_counts_oversize_bushes(rng):
    # with size_cap 1 a single vertex is always accepted and anything larger is oversize
    for _ in range(50):
        t = sample_unimodular_mekt(two_point(0.1, 0.9), _budget(), rng, size_cap=1)
        assert t.rejections == 0
        assert t.oversize == (len(t.center_nodes) > 1)


def test_canopy_level_law():
    law = canopy_level_law(2)
    assert law[0] == pytest.approx(0.5)
    assert law[1] == pytest.approx(0.25)
    with pytest.raises(ValueError):
        canopy_level_law(1)


def test_canopy_structure(rng):
    for _ in range(100):
        t = sample_canopy(canopy_level_law(2), 2, 3, rng)
        for u in list(t.nodes()):
            kids = t._children[u]
            if kids is None:
                continue
            assert len(kids) == (0 if t.level(u) == 0 else 2)
            assert all(t.level(c) == t.level(u) - 1 for c in kids)


def test_regular_tree_ball():
    t = regular_tree_ball(3, 2)
    assert len(t) == 10
    assert len(t.children(0)) == 3
    assert all(len(t.children(c)) == 2 for c in t.children(0))


# ---------------------------------------------------------------------------
# Degenerate laws


def test_sbgw_of_delta_zero_is_a_single_node(rng):
    t = sample_sbgw({0: 1.0}, _budget(), rng)
    assert len(t) == 1 and t.parent(t.root) is None


def test_delta_one_eternal_trees_are_paths(rng):
    # [TRIVIAL] every vertex has exactly one child and one parent
    for sampler in (sample_egwt, sample_ekt):
        t = sampler({1: 1.0}, _budget(height_cap=10), rng)
        u = t.root
        for _ in range(5):
            assert len(t.children(u)) == 1
            u = t.parent(u)
        u = t.root
        for _ in range(5):
            (u,) = t.children(u)


def test_single_node_bushes_make_the_path(rng):
    from recordwalk.samplers import JoinedTree, unimodularise_joining
    from recordwalk.trees import OrderedTree

    def bush(g):
        t = OrderedTree()
        t.add_node(mark=0)
        return t

    t = unimodularise_joining(bush, _budget(), rng, size_cap=1)
    assert isinstance(t, JoinedTree) and t.path_index(t.root) == 0
    assert t.rejections == 0 and t.oversize == 0
    assert len(t.children(t.root)) == 1 and t.path_index(t.parent(t.root)) == 1


def test_two_vertex_bushes_root_lands_on_bush_root_half_the_time(rng):
    # [DERIVED] size-biasing a bush of 2 vertices picks its root w.p. 1/2
    from recordwalk.samplers import unimodularise_joining
    from recordwalk.trees import OrderedTree

    def bush(g):
        t = OrderedTree()
        t.add_node(mark=1)
        t.add_node(0, mark=-1)
        return t

    n = 4000
    hits = 0
    for _ in range(n):
        t = unimodularise_joining(bush, _budget(), rng, size_cap=2)
        hits += t.path_index(t.root) is not None
    assert _close(hits / n, 0.5, n)


def test_egwt_root_offspring_follows_pi(rng):
    pi = parse_offspring("0:0.4,1:0.2,2:0.4")
    n = 10_000
    counts = Counter(len(sample_egwt(pi, _budget(), rng).children(0)) for _ in range(n))
    for k, q in pi.items():
        assert _close(counts[k] / n, q, n)


def test_sbgw_size_is_size_biased(rng):
    # [DERIVED] E[#V] under SBGW is E[#V^2] / E[#V] of the GW tree
    pi = parse_offspring("0:0.7,1:0.2,2:0.1")
    gw = np.array([len(sample_gw(pi, _budget(), rng)) for _ in range(20_000)], dtype=float)
    sb = []
    for _ in range(20_000):
        t = sample_sbgw(pi, _budget(), rng)
        t.expand_all()
        sb.append(len(t))
    sb = np.array(sb, dtype=float)
    want = (gw ** 2).mean() / gw.mean()
    assert abs(sb.mean() - want) < 4 * sb.std() / np.sqrt(len(sb))
