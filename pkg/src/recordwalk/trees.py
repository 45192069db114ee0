"""Ordered family trees: arena storage, RLS order, succession lines, encodings.

The functions below only use ``t.parent(u)``, ``t.children(u)`` and
``t.mark(u)``, so they accept both :class:`OrderedTree` arenas (possibly grown
lazily by a sampler) and the window views of :mod:`recordwalk.record`.
Accessors raise :class:`~recordwalk.seq.CensoredError` when the structure is
not available; callers decide whether to escalate.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Optional

from .seq import CensoredError

_NONE = -1
_UNKNOWN = -2


class OrderedTree:
    """Arena of nodes with parent links, ordered child lists and optional marks.

    Node ids are ``0 .. len(t) - 1``.  A parent slot may be *unknown* and a
    child list may be *unexpanded*; subclasses fill them on first access by
    overriding :meth:`_grow_parent` and :meth:`_grow_children`.
    """

    def __init__(self) -> None:
        self._parent: list[int] = []
        self._children: list[Optional[list[int]]] = []
        self._mark: list[Optional[int]] = []
        self.root = 0

    def __len__(self) -> int:
        return len(self._parent)

    def nodes(self) -> range:
        return range(len(self._parent))

    # -- construction ---------------------------------------------------
    def _new(self, parent: int = _NONE, children: Optional[list] = None,
             mark: Optional[int] = None) -> int:
        self._parent.append(parent)
        self._children.append(children)
        self._mark.append(mark)
        return len(self._parent) - 1

    def add_node(self, parent: Optional[int] = None, mark: Optional[int] = None) -> int:
        """Append a fully known node as the last child of ``parent``."""
        u = self._new(_NONE if parent is None else parent, [], mark)
        if parent is not None:
            self._children[parent].append(u)
        return u

    def set_mark(self, u: int, mark: Optional[int]) -> None:
        self._mark[u] = mark

    # -- lazy hooks -----------------------------------------------------
    def _grow_parent(self, u: int) -> None:
        raise CensoredError(u)

    def _grow_children(self, u: int) -> None:
        raise CensoredError(u)

    def parent_known(self, u: int) -> bool:
        return self._parent[u] != _UNKNOWN

    def children_known(self, u: int) -> bool:
        return self._children[u] is not None

    # -- accessors ------------------------------------------------------
    def parent(self, u: int) -> Optional[int]:
        if self._parent[u] == _UNKNOWN:
            self._grow_parent(u)
        p = self._parent[u]
        return None if p == _NONE else p

    def children(self, u: int) -> list[int]:
        if self._children[u] is None:
            self._grow_children(u)
        return self._children[u]

    def mark(self, u: int) -> Optional[int]:
        return self._mark[u]

    # -- serialisation --------------------------------------------------
    def to_json(self) -> dict:
        """Known structure; unknown parents and unexpanded child lists are ``null``."""
        nodes = []
        for u in self.nodes():
            p = self._parent[u]
            nodes.append({
                "parent": None if p < 0 else p,
                "parent_known": p != _UNKNOWN,
                "children": None if self._children[u] is None else list(self._children[u]),
                "mark": self._mark[u],
            })
        return {"root": self.root, "nodes": nodes}

    @classmethod
    def from_json(cls, obj: dict) -> "OrderedTree":
        t = cls()
        for nd in obj["nodes"]:
            p = nd.get("parent")
            if p is None:
                p = _NONE if nd.get("parent_known", True) else _UNKNOWN
            t._new(p, None if nd["children"] is None else list(nd["children"]), nd.get("mark"))
        t.root = obj["root"]
        t.validate()
        return t

    def validate(self) -> None:
        """Check parent/child consistency of the known part of the arena."""
        seen_as_child = set()
        for u in self.nodes():
            ch = self._children[u]
            if ch is None:
                continue
            for c in ch:
                if c in seen_as_child:
                    raise ValueError(f"node {c} appears in two child lists")
                seen_as_child.add(c)
                if self._parent[c] != u:
                    raise ValueError(f"child {c} of {u} has parent {self._parent[c]}")
            m = self._mark[u]
            if m is not None and m < -1:
                raise ValueError(f"mark {m} of node {u} is below -1")
        for u in self.nodes():
            p = self._parent[u]
            if p >= 0 and self._children[p] is not None and u not in self._children[p]:
                raise ValueError(f"node {u} missing from child list of {p}")


def tree_from_parents(parents: Iterable[Optional[int]], marks: Optional[Iterable] = None,
                      root: int = 0) -> OrderedTree:
    """Arena from a parent array; siblings are ordered by node id."""
    parents = list(parents)
    marks = list(marks) if marks is not None else [None] * len(parents)
    t = OrderedTree()
    for p, m in zip(parents, marks):
        t._new(_NONE if p is None else p, [], m)
    for u, p in enumerate(parents):
        if p is not None:
            t._children[p].append(u)
    t.root = root
    return t


# ---------------------------------------------------------------------------
# Parent shift, ancestors, level offsets


def parent_shift(t, u: Hashable) -> Hashable:
    """``F(u)``: the parent, or ``u`` itself when there is none."""
    p = t.parent(u)
    return u if p is None else p


def ancestors(t, u: Hashable, limit: Optional[int] = None) -> list:
    """``[u, F(u), F^2(u), ...]`` up to the top or ``limit`` steps."""
    out = [u]
    while limit is None or len(out) <= limit:
        p = t.parent(out[-1])
        if p is None:
            break
        out.append(p)
    return out


def _meet(t, u: Hashable, v: Hashable, max_steps: int = 10_000_000) -> tuple[list, list]:
    """Ancestor chains of ``u`` and ``v`` up to their smallest common ancestor.

    Both chains are climbed in alternation, so eternal trees are fine.
    """
    cu, cv = [u], [v]
    pu, pv = {u: 0}, {v: 0}
    done_u = done_v = False
    for _ in range(max_steps):
        if cu[-1] in pv:
            k = pv[cu[-1]]
            return cu, cv[:k + 1]
        if cv[-1] in pu:
            k = pu[cv[-1]]
            return cu[:k + 1], cv
        if done_u and done_v:
            raise ValueError(f"{u} and {v} are not connected")
        if not done_u:
            p = t.parent(cu[-1])
            if p is None:
                done_u = True
            else:
                pu[p] = len(cu)
                cu.append(p)
        if not done_v:
            p = t.parent(cv[-1])
            if p is None:
                done_v = True
            else:
                pv[p] = len(cv)
                cv.append(p)
    raise CensoredError((u, v))


def level_offset(t, v: Hashable, w: Hashable) -> int:
    """``l(v, w)``: generation of ``w`` minus generation of ``v`` (parents are one lower)."""
    cu, cv = _meet(t, v, w)
    return len(cv) - len(cu)


# ---------------------------------------------------------------------------
# RLS order


PRECEDES, SUCCEEDS, EQUAL = "precedes", "succeeds", "equal"


def rls_compare(t, u: Hashable, v: Hashable) -> str:
    """Royal-line-of-succession comparison: ancestors succeed descendants,
    otherwise the sibling order below the smallest common ancestor decides."""
    if u == v:
        return EQUAL
    cu, cv = _meet(t, u, v)
    if len(cu) == 1:
        return SUCCEEDS
    if len(cv) == 1:
        return PRECEDES
    sibs = t.children(cu[-1])
    return PRECEDES if sibs.index(cu[-2]) < sibs.index(cv[-2]) else SUCCEEDS


def minimal_descendant(t, u: Hashable, max_depth: int = 1_000_000) -> Hashable:
    """The RLS-smallest descendant of ``u`` (follow first children to a leaf)."""
    for _ in range(max_depth):
        ch = t.children(u)
        if not ch:
            return u
        u = ch[0]
    raise CensoredError(u)


def succ_b(t, u: Hashable) -> Optional[Hashable]:
    """``b(u)``, the largest vertex preceding ``u`` in RLS order, or None."""
    ch = t.children(u)
    if ch:
        return ch[-1]
    cur = u
    while True:
        p = t.parent(cur)
        if p is None:
            return None
        sibs = t.children(p)
        k = sibs.index(cur)
        if k > 0:
            return sibs[k - 1]
        cur = p


def pred_a(t, u: Hashable) -> Optional[Hashable]:
    """``a(u)``, the smallest vertex succeeding ``u`` in RLS order, or None."""
    p = t.parent(u)
    if p is None:
        return None
    sibs = t.children(p)
    k = sibs.index(u)
    if k + 1 < len(sibs):
        return minimal_descendant(t, sibs[k + 1])
    return p


EXHAUSTED, MAX_STEPS, CENSORED_END = "exhausted", "max_steps", "censored"


@dataclass
class SuccessionLine:
    """``... b(b(o)), b(o), o, a(o), a(a(o)) ...`` with the reason each run ended."""

    center: Hashable
    backward: list = field(default_factory=list)
    forward: list = field(default_factory=list)
    backward_end: str = EXHAUSTED
    forward_end: str = EXHAUSTED

    def as_list(self) -> list:
        return list(reversed(self.backward)) + [self.center] + list(self.forward)

    def at(self, n: int) -> Hashable:
        """``u_n`` with ``u_0`` the center."""
        if n == 0:
            return self.center
        if n > 0:
            return self.forward[n - 1]
        return self.backward[-n - 1]

    @property
    def lo(self) -> int:
        return -len(self.backward)

    @property
    def hi(self) -> int:
        return len(self.forward)


def _forward_run(t, o, max_steps: int) -> tuple[list, str]:
    """Iterated ``a`` from ``o``: post-order traversal continued through the ancestors."""
    out: list = []
    cur = o
    try:
        while len(out) < max_steps:
            p = t.parent(cur)
            if p is None:
                return out, EXHAUSTED
            sibs = t.children(p)
            k = sibs.index(cur) + 1
            # post-order over the later siblings' subtrees, then p itself
            stack = [(sibs, k)]
            while stack and len(out) < max_steps:
                lst, j = stack[-1]
                if j == len(lst):
                    stack.pop()
                    if stack:
                        plst, pj = stack[-1]
                        out.append(plst[pj])
                        stack[-1] = (plst, pj + 1)
                    continue
                v = lst[j]
                ch = t.children(v)
                if ch:
                    stack.append((ch, 0))
                else:
                    out.append(v)
                    stack[-1] = (lst, j + 1)
            if len(out) >= max_steps:
                break
            out.append(p)
            cur = p
    except CensoredError:
        return out, CENSORED_END
    return out[:max_steps], MAX_STEPS


def _backward_run(t, o, max_steps: int) -> tuple[list, str]:
    """Iterated ``b`` from ``o``: reverse pre-order of the subtree of ``o``, then
    of each earlier sibling of ``o`` and of its ancestors."""
    out: list = []
    try:
        stack = [list(t.children(o))]
        cur = o
        while len(out) < max_steps:
            while stack and len(out) < max_steps:
                top = stack[-1]
                if not top:
                    stack.pop()
                    continue
                v = top.pop()
                out.append(v)
                if len(out) >= max_steps:
                    break
                ch = t.children(v)
                if ch:
                    stack.append(list(ch))
            if len(out) >= max_steps:
                break
            # subtree exhausted: move to the earlier siblings of the nearest ancestor having some
            while True:
                p = t.parent(cur)
                if p is None:
                    return out, EXHAUSTED
                sibs = t.children(p)
                k = sibs.index(cur)
                if k > 0:
                    stack = [sibs[:k]]
                    cur = p
                    break
                cur = p
    except CensoredError:
        return out, CENSORED_END
    return out, MAX_STEPS


def _run(t, o, step, max_steps: int) -> tuple[list, str]:
    out, cur = [], o
    while len(out) < max_steps:
        try:
            nxt = step(t, cur)
        except CensoredError:
            return out, CENSORED_END
        if nxt is None:
            return out, EXHAUSTED
        out.append(nxt)
        cur = nxt
    return out, MAX_STEPS


def succession_line(t, o: Hashable, max_steps: int, max_back: Optional[int] = None) -> SuccessionLine:
    """Succession line through ``o``, at most ``max_steps`` in each direction."""
    back, bend = _backward_run(t, o, max_steps if max_back is None else max_back)
    fwd, fend = _forward_run(t, o, max_steps)
    return SuccessionLine(o, back, fwd, bend, fend)


def rls_sorted(t, root: Hashable) -> list:
    """Vertices of the finite tree below ``root`` in ascending RLS order (post-order)."""
    out, stack = [], [(root, False)]
    while stack:
        u, done = stack.pop()
        if done:
            out.append(u)
            continue
        stack.append((u, True))
        for c in reversed(t.children(u)):
            stack.append((c, False))
    return out


def lukasiewicz_sum_check(t, root: Optional[Hashable] = None) -> bool:
    """On a finite ordered tree, RLS-ascending sums of ``d_1 - 1`` stay negative
    and end at exactly -1."""
    root = t.root if root is None else root
    total = 0
    for u in rls_sorted(t, root):
        total += len(t.children(u)) - 1
        if total >= 0:
            return False
    return total == -1


# ---------------------------------------------------------------------------
# Canonical keys


def ball(t, o: Hashable, r: int) -> tuple[Hashable, dict, dict]:
    """Undirected radius-``r`` ball around ``o``.

    Returns the top vertex, the distance of every ball vertex, and the ball
    children of each vertex.  Child lists are only read for vertices strictly
    inside the ball, so boundary vertices never need to be expanded.
    """
    chain = ancestors(t, o, limit=r)
    dist = {u: k for k, u in enumerate(chain)}
    kids: dict = {u: [] for u in chain}
    for k in range(1, len(chain)):
        kids[chain[k]] = [chain[k - 1]]
    frontier = list(chain)
    while frontier:
        nxt = []
        for u in frontier:
            d = dist[u]
            if d >= r:
                continue
            ch = t.children(u)
            kids[u] = list(ch)
            for c in ch:
                if c not in dist:
                    dist[c] = d + 1
                    kids[c] = []
                    nxt.append(c)
        frontier = nxt
    return chain[-1], dist, kids


def _encode(t, top, kids, root, ordered: bool, with_marks: bool, depth_cap: Optional[int]) -> bytes:
    """Iterative parenthesisation of the subtree of ``top``; ``kids`` maps a
    vertex to its child list (None reads the tree)."""
    enc: dict = {}
    stack = [(top, 0, False)]
    while stack:
        u, dpt, done = stack.pop()
        if depth_cap is not None and dpt > depth_cap:
            raise OverflowError("tree deeper than allowed")
        ch = t.children(u) if kids is None else kids[u]
        if not done:
            stack.append((u, dpt, True))
            for c in ch:
                stack.append((c, dpt + 1, False))
            continue
        parts = [enc.pop(c) for c in ch]
        if not ordered:
            parts.sort()
        head = b"(" + (b"*" if u == root else b"")
        if with_marks:
            m = t.mark(u)
            if m is not None:
                head += b"m" + str(m).encode()
        enc[u] = head + b"".join(parts) + b")"
    return enc[top]


def canonical_encode(t, root: Optional[Hashable] = None, mode: str = "ordered",
                     radius: Optional[int] = None, *, with_marks: bool = True,
                     max_nodes: Optional[int] = 10_000_000) -> bytes:
    """Byte key of the rooted (optionally marked) tree, or of its radius ball.

    Ordered mode keeps sibling order; unordered mode sorts child keys.  Without
    a radius the whole component reachable downward from the top of ``root`` is
    encoded, which must be finite.
    """
    if mode not in ("ordered", "unordered"):
        raise ValueError(f"unknown mode {mode!r}")
    root = t.root if root is None else root
    ordered = mode == "ordered"
    if radius is not None:
        top, _, kids = ball(t, root, radius)
        return _encode(t, top, kids, root, ordered, with_marks, None)
    top = ancestors(t, root, limit=max_nodes)[-1]
    if t.parent(top) is not None:
        raise OverflowError("ancestor chain longer than max_nodes")
    return _encode(t, top, None, root, ordered, with_marks, max_nodes)


def ball_key(t, o: Hashable, r: int, mode: str = "ordered", with_marks: bool = True) -> bytes:
    return canonical_encode(t, o, mode, r, with_marks=with_marks)


# ---------------------------------------------------------------------------
# Export


def materialize(t, root: Hashable, nodes: Iterable[Hashable]) -> OrderedTree:
    """Copy the induced forest on ``nodes`` into a fresh arena rooted at ``root``."""
    nodes = list(nodes)
    idx = {u: k for k, u in enumerate(nodes)}
    keep = set(nodes)
    out = OrderedTree()
    for u in nodes:
        out._new(_NONE, [], t.mark(u))
    for u in nodes:
        for c in t.children(u):
            if c in keep:
                out._children[idx[u]].append(idx[c])
                out._parent[idx[c]] = idx[u]
    out.root = idx[root]
    return out


def tree_to_dot(t, name: str = "tree", labels: Optional[dict] = None) -> str:
    """DOT digraph of a finite arena, edges child -> parent, labelled by RLS rank."""
    ranks: dict = {}
    for top in [u for u in t.nodes() if t.parent(u) is None]:
        for k, u in enumerate(rls_sorted(t, top)):
            ranks[u] = k
    lines = [f"digraph {name} {{", "  rankdir=BT;"]
    for u in t.nodes():
        lab = labels[u] if labels and u in labels else f"{u} r{ranks.get(u, '?')}"
        m = t.mark(u)
        if m is not None:
            lab += f" m={m}"
        style = ', shape=doublecircle' if u == t.root else ""
        lines.append(f'  n{u} [label="{lab}"{style}];')
    for u in t.nodes():
        for c in t.children(u):
            lines.append(f"  n{c} -> n{u};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def tree_dumps(t: OrderedTree) -> str:
    return json.dumps(t.to_json(), sort_keys=True)


def undirected_ball_key(t, o: Hashable, r: int) -> bytes:
    """Unordered key of the radius-``r`` ball as an undirected tree hung from ``o``.

    Forgets edge directions, so balls of different family trees can match the
    same regular tree.
    """
    def nbrs(u, d):
        out = list(t.children(u)) if d < r else []
        p = t.parent(u) if d < r else None
        if p is not None:
            out.append(p)
        return out

    enc: dict = {}
    stack = [(o, None, 0, False)]
    while stack:
        u, prev, d, done = stack.pop()
        kids = [v for v in nbrs(u, d) if v != prev]
        if not done:
            stack.append((u, prev, d, True))
            for v in kids:
                stack.append((v, u, d + 1, False))
            continue
        enc[u] = b"(" + b"".join(sorted(enc.pop(v) for v in kids)) + b")"
    return enc[o]
