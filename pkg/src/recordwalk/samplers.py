"""Samplers for the family-tree laws: GW, TGWT, SBGW, EGWT, EKT, MEKT, canopy.

Infinite trees are returned as lazily grown arenas: a node's children or
parent are drawn the first time they are read, with exactly the law of the
full object.  Statistics on radius-``r`` balls therefore only generate what
they touch.  ``SamplerBudget.node_cap`` bounds the arena size and
``height_cap`` bounds how far an eternal spine is followed.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .seq import (CensoredError, DiscreteLaw, IncrementDistribution, OffspringLaw,
                  bar_tilde_pi, joint_mark_law, size_biased)
from .trees import _NONE, _UNKNOWN, OrderedTree

ERROR, RESAMPLE = "error", "resample_with_count"


class TreeOverflow(OverflowError):
    """A sampled arena grew past ``node_cap``."""


@dataclass
class SamplerBudget:
    node_cap: int = 100_000
    height_cap: int = 64
    overflow: str = RESAMPLE
    resamples: int = 0

    def __post_init__(self):
        if self.node_cap <= 0 or self.height_cap <= 0:
            raise ValueError("caps must be positive")
        if self.overflow not in (ERROR, RESAMPLE):
            raise ValueError(f"unknown overflow policy {self.overflow!r}")


def _as_offspring(pi) -> OffspringLaw:
    if isinstance(pi, OffspringLaw):
        return pi
    return OffspringLaw(dict(pi.mass) if isinstance(pi, DiscreteLaw) else dict(pi))


# Node kinds of lazy arenas.
FIXED = 0      # fully known at creation
GW = 1         # children drawn from the tree's GW law; parent known
ROOT = 2       # children from the GW law; parent drawn lazily
ANC = 3        # spine ancestor: children known at creation; parent drawn lazily
SPECIAL = 4    # downward spine: children from size-biased law with one special child
PATH = 5       # joined bush root on a bi-infinite path
CANOPY = 6     # canopy vertex: level in info


class LazyTree(OrderedTree):
    """Arena whose unknown slots are filled by the sampler that made it."""

    def __init__(self, budget: SamplerBudget, rng: np.random.Generator,
                 gw_law: Optional[DiscreteLaw] = None):
        super().__init__()
        self.budget = budget
        self.rng = rng
        self.gw_law = gw_law
        self._kind: list[int] = []
        self._info: list = []

    def _spawn(self, parent: int, kind: int, info=None, mark=None, children=None) -> int:
        if len(self) >= self.budget.node_cap:
            raise TreeOverflow(self.budget.node_cap)
        u = self._new(parent, children, mark)
        self._kind.append(kind)
        self._info.append(info)
        return u

    def kind(self, u: int) -> int:
        return self._kind[u]

    def _gw_brood(self, u: int, k: int, mark=None) -> list[int]:
        return [self._spawn(u, GW, mark=mark) for _ in range(k)]

    def _grow_children(self, u: int) -> None:
        kind = self._kind[u]
        if kind in (GW, ROOT):
            self._children[u] = self._gw_brood(u, self.gw_law.draw(self.rng), self._child_mark())
            return
        self._grow_special(u)

    def _child_mark(self):
        return None

    def _grow_special(self, u: int) -> None:
        raise CensoredError(u)

    def expand_all(self, max_nodes: Optional[int] = None) -> None:
        """Expand every child list reachable from known nodes (finite parts only)."""
        cap = max_nodes or self.budget.node_cap
        k = 0
        while k < len(self):
            if self._children[k] is None:
                try:
                    self.children(k)
                except CensoredError:
                    pass
            k += 1
            if len(self) > cap:
                raise TreeOverflow(cap)


def _with_policy(budget: SamplerBudget, make: Callable[[], OrderedTree]) -> OrderedTree:
    while True:
        try:
            return make()
        except TreeOverflow:
            if budget.overflow == ERROR:
                raise
            budget.resamples += 1


# ---------------------------------------------------------------------------
# Galton-Watson


def sample_gw(pi, budget: SamplerBudget, rng: np.random.Generator) -> OrderedTree:
    """Whole ordered GW(pi) tree, generated breadth first.

    Children are exchangeable, so generation order is already a uniform order.
    """
    law = _as_offspring(pi)

    def make():
        t = OrderedTree()
        t.add_node()
        k = 0
        while k < len(t):
            n = law.draw(rng)
            if len(t) + n > budget.node_cap:
                raise TreeOverflow(budget.node_cap)
            for _ in range(n):
                t.add_node(k)
            k += 1
        return t

    return _with_policy(budget, make)


class GWTree(LazyTree):
    """Lazy GW tree rooted at node 0 with no parent."""

    def __init__(self, pi, budget, rng):
        super().__init__(budget, rng, _as_offspring(pi))
        self._spawn(_NONE, GW)


# ---------------------------------------------------------------------------
# Typically rooted GW tree and its progenitor re-rooting


class TGWTree(LazyTree):
    """Root with GW descendants; each ancestor exists with probability ``m``
    and has ``Z ~ pi_hat`` children, the previous one at a uniform rank."""

    def __init__(self, pi, budget, rng):
        law = _as_offspring(pi)
        m = law.mean
        if not 0 <= m < 1:
            raise ValueError("TGWT needs m(pi) < 1")
        super().__init__(budget, rng, law)
        self.m = m
        # with m = 0 the root never has a parent
        self.hat = size_biased(law) if m > 0 else None
        self._spawn(_UNKNOWN, ROOT)

    def _grow_parent(self, u: int) -> None:
        if self.rng.random() >= self.m:
            self._parent[u] = _NONE
            return
        z = self.hat.draw(self.rng)
        rank = int(self.rng.integers(z))
        p = self._spawn(_UNKNOWN, ANC, children=[])
        kids = [self._spawn(p, GW) for _ in range(z - 1)]
        kids.insert(rank, u)
        self._children[p] = kids
        self._parent[u] = p


def sample_tgwt(pi, budget: SamplerBudget, rng: np.random.Generator) -> TGWTree:
    return _with_policy(budget, lambda: TGWTree(pi, budget, rng))


def progenitor(t: OrderedTree, u: Optional[int] = None) -> int:
    u = t.root if u is None else u
    while True:
        p = t.parent(u)
        if p is None:
            return u
        u = p


def sample_sbgw(pi, budget: SamplerBudget, rng: np.random.Generator) -> OrderedTree:
    """TGWT re-rooted at its progenitor."""

    def make():
        t = TGWTree(pi, budget, rng)
        t.root = progenitor(t)
        return t

    return _with_policy(budget, make)


# ---------------------------------------------------------------------------
# Eternal trees


class EGWTree(LazyTree):
    """Root with GW(pi) descendants below an infinite spine of ``pi_hat`` vertices."""

    def __init__(self, pi, budget, rng):
        law = _as_offspring(pi)
        if abs(law.mean - 1) > 1e-9:
            raise ValueError("EGWT needs m(pi) = 1")
        super().__init__(budget, rng, law)
        self.hat = size_biased(law)
        self._spawn(_UNKNOWN, ROOT, info=0)

    def _grow_parent(self, u: int) -> None:
        h = self._info[u]
        if h >= self.budget.height_cap:
            raise CensoredError(u)
        z = self.hat.draw(self.rng)
        rank = int(self.rng.integers(z))
        p = self._spawn(_UNKNOWN, ANC, info=h + 1, children=[])
        kids = [self._spawn(p, GW) for _ in range(z - 1)]
        kids.insert(rank, u)
        self._children[p] = kids
        self._parent[u] = p


def sample_egwt(pi, budget: SamplerBudget, rng: np.random.Generator) -> EGWTree:
    return _with_policy(budget, lambda: EGWTree(pi, budget, rng))


class EKTree(EGWTree):
    """Two-sided spine of special vertices; everything else GW(pi)."""

    def __init__(self, pi, budget, rng):
        super().__init__(pi, budget, rng)
        self._kind[0] = SPECIAL
        self._info[0] = 0

    def _grow_special(self, u: int) -> None:
        depth = self._info[u]
        if depth <= -self.budget.height_cap:
            raise CensoredError(u)
        z = self.hat.draw(self.rng)
        rank = int(self.rng.integers(z))
        kids = []
        for k in range(z):
            if k == rank:
                kids.append(self._spawn(u, SPECIAL, info=depth - 1))
            else:
                kids.append(self._spawn(u, GW))
        self._children[u] = kids


def sample_ekt(pi, budget: SamplerBudget, rng: np.random.Generator) -> EKTree:
    return _with_policy(budget, lambda: EKTree(pi, budget, rng))


# ---------------------------------------------------------------------------
# Bushes joined along a bi-infinite path (ECS order: path child first)


class JoinedTree(LazyTree):
    """I.i.d. finite bushes whose roots form a bi-infinite path.

    The bush of path index ``n`` is drawn when it is first reached; the
    path child of each bush root is its smallest child.
    """

    def __init__(self, bush_sampler: Callable[[np.random.Generator], OrderedTree],
                 budget: SamplerBudget, rng: np.random.Generator,
                 center: Optional[OrderedTree] = None):
        super().__init__(budget, rng)
        self.bush_sampler = bush_sampler
        self.center_nodes: list[int] = []
        bush = center if center is not None else bush_sampler(rng)
        o, nodes = self._attach(bush, _UNKNOWN, 0)
        self.center_nodes = nodes
        self.root = o

    def _attach(self, bush: OrderedTree, parent: int, n: int) -> tuple[int, list[int]]:
        ids = {}
        order = [bush.root]
        k = 0
        while k < len(order):
            order.extend(bush.children(order[k]))
            k += 1
        for b in order:
            if b == bush.root:
                ids[b] = self._spawn(parent, PATH, info=[n, None], mark=bush.mark(b))
            else:
                ids[b] = self._spawn(ids[bush.parent(b)], FIXED, mark=bush.mark(b), children=[])
        for b in order:
            if b != bush.root:
                self._children[ids[b]] = [ids[c] for c in bush.children(b)]
        o = ids[bush.root]
        self._info[o][1] = [ids[c] for c in bush.children(bush.root)]
        return o, [ids[b] for b in order]

    def path_index(self, u: int) -> Optional[int]:
        return self._info[u][0] if self._kind[u] == PATH else None

    def bush_children(self, u: int) -> list[int]:
        return list(self._info[u][1])

    def _grow_special(self, u: int) -> None:
        n = self._info[u][0]
        if n <= -self.budget.height_cap:
            raise CensoredError(u)
        child, _ = self._attach(self.bush_sampler(self.rng), u, n - 1)
        self._children[u] = [child] + self._info[u][1]

    def _grow_parent(self, u: int) -> None:
        n = self._info[u][0]
        if n >= self.budget.height_cap:
            raise CensoredError(u)
        p, _ = self._attach(self.bush_sampler(self.rng), _NONE, n + 1)
        self._parent[p] = _UNKNOWN
        self._children[p] = [u] + self._info[p][1]
        self._parent[u] = p


def mekt_bush_sampler(d: IncrementDistribution, budget: Optional[SamplerBudget] = None):
    """Bush of ``MEKT(pi_bar, pi_tilde)``: root mark and offspring drawn jointly from
    ``P[X_0 = n + k] c^k``, each child carrying a GW(pi_tilde) tree, marks -1 off the root."""
    joint = joint_mark_law(d)
    pairs = sorted(joint)
    index_law = DiscreteLaw.normalised({i: joint[pr] for i, pr in enumerate(pairs)})
    _, tilde = bar_tilde_pi(d)
    cap = (budget.node_cap if budget else 1_000_000)

    def sample(rng: np.random.Generator) -> OrderedTree:
        mark, k = pairs[index_law.draw(rng)]
        t = OrderedTree()
        t.add_node(mark=mark)
        for _ in range(k):
            t.add_node(0, mark=-1)
        j = 1
        while j < len(t):
            n = tilde.draw(rng)
            if len(t) + n > cap:
                raise TreeOverflow(cap)
            for _ in range(n):
                t.add_node(j, mark=-1)
            j += 1
        return t

    return sample


def sample_mekt(d: IncrementDistribution, budget: SamplerBudget, n_bushes: Optional[int],
                rng: np.random.Generator) -> JoinedTree:
    """``MEKT(pi_bar, pi_tilde)`` rooted at the path vertex ``o_0``.

    ``n_bushes`` caps the path on each side (defaults to ``height_cap``).
    """
    if d.mean <= 0:
        raise ValueError("MEKT needs a positive-mean increment law")
    if n_bushes is not None:
        budget = SamplerBudget(budget.node_cap, n_bushes, budget.overflow)
    sampler = mekt_bush_sampler(d, budget)
    return _with_policy(budget, lambda: JoinedTree(sampler, budget, rng))


def unimodularise_joining(bush_sampler: Callable[[np.random.Generator], OrderedTree],
                          budget: SamplerBudget, rng: np.random.Generator,
                          size_cap: Optional[int] = None) -> JoinedTree:
    """Size-biased re-rooting of a joining: the central bush is accepted with
    probability ``#V / size_cap`` and the root is uniform on its vertices.

    ``size_cap`` defaults to ``budget.node_cap``, which otherwise bounds the
    arena.  ``tree.rejections`` counts rejected bushes and ``tree.oversize``
    counts accepted bushes larger than ``size_cap`` (a bias that should be zero).
    """
    cap = size_cap or budget.node_cap
    rejections = oversize = 0
    while True:
        bush = bush_sampler(rng)
        size = len(bush)
        if size > cap:
            oversize += 1
            break
        if rng.random() * cap < size:
            break
        rejections += 1
        if rejections > 1000 * cap:
            raise ValueError("acceptance probability degenerate: size_cap far above bush sizes")
    t = _with_policy(budget, lambda: JoinedTree(bush_sampler, budget, rng, center=bush))
    t.root = t.center_nodes[int(rng.integers(len(t.center_nodes)))]
    t.rejections = rejections
    t.oversize = oversize
    return t


def sample_unimodular_mekt(d: IncrementDistribution, budget: SamplerBudget,
                           rng: np.random.Generator, size_cap: Optional[int] = None) -> JoinedTree:
    return unimodularise_joining(mekt_bush_sampler(d, budget), budget, rng, size_cap)


# ---------------------------------------------------------------------------
# Canopy tree and regular-tree balls


class CanopyTree(LazyTree):
    """Canopy tree: level-0 vertices are leaves, each level-``j`` vertex has
    ``d`` children at level ``j - 1`` and a parent at level ``j + 1``."""

    def __init__(self, d: int, level: int, budget, rng):
        super().__init__(budget, rng)
        self.d = d
        self._spawn(_UNKNOWN, CANOPY, info=level)

    def level(self, u: int) -> int:
        return self._info[u]

    def _grow_special(self, u: int) -> None:
        lv = self._info[u]
        self._children[u] = [] if lv == 0 else [
            self._spawn(u, CANOPY, info=lv - 1) for _ in range(self.d)]

    def _grow_parent(self, u: int) -> None:
        lv = self._info[u]
        p = self._spawn(_UNKNOWN, CANOPY, info=lv + 1, children=[])
        kids = [u] + [self._spawn(p, CANOPY, info=lv) for _ in range(self.d - 1)]
        self._children[p] = kids
        self._parent[u] = p


def canopy_level_law(d: int, max_level: int = 64) -> OffspringLaw:
    """Level of a typical canopy vertex, ``P[j] = (d - 1) d^-(j + 1)``, truncated
    at ``max_level`` and renormalised."""
    if d < 2:
        raise ValueError("canopy needs d >= 2")
    return OffspringLaw.normalised({j: (d - 1) / d ** (j + 1) for j in range(max_level + 1)})


def sample_canopy(level_law, d: int, radius: int, rng: np.random.Generator,
                  budget: Optional[SamplerBudget] = None) -> CanopyTree:
    """Canopy tree ``C_d`` rooted at a level drawn from ``level_law``.

    Everything within ``radius`` of the root is expanded.
    """
    law = _as_offspring(level_law)
    budget = budget or SamplerBudget()
    t = CanopyTree(d, law.draw(rng), budget, rng)
    frontier = [t.root]
    seen = {t.root}
    for _ in range(radius):
        nxt = []
        for u in frontier:
            nbrs = list(t.children(u))
            nbrs.append(t.parent(u))
            for v in nbrs:
                if v not in seen:
                    seen.add(v)
                    nxt.append(v)
        frontier = nxt
    return t


def regular_tree_ball(degree: int, radius: int) -> OrderedTree:
    """Radius ball of the ``degree``-regular tree, as a tree hanging from its center."""
    t = OrderedTree()
    t.add_node()
    frontier = [0]
    for depth in range(radius):
        nxt = []
        for u in frontier:
            for _ in range(degree if depth == 0 else degree - 1):
                nxt.append(t.add_node(u))
        frontier = nxt
    return t
