"""The record map on windows, record graphs, foils, and the shifts SR and C.

Every query is three-valued: a :class:`~recordwalk.seq.Value` is returned only
when no continuation of the window outside ``[lo, hi]`` could change it
(or when the window opts into margin certification).  Positions are vertices of
the integer line; ``R(i) = min{j > i : S_j >= S_i}`` and ``R(i) = i`` when no
record exists.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .seq import CENSORED, Censored, CensoredError, Resolved, Value, Window

NEG_INF = -math.inf
_FIRST_CHUNK = 32


# ---------------------------------------------------------------------------
# Chunked scans over prefix sums (array indices, not positions)


def _scan_right_ge(sums: np.ndarray, start: int, level: int) -> int:
    """First index ``k >= start`` with ``sums[k] >= level``, or -1."""
    n = len(sums)
    k, step = start, _FIRST_CHUNK
    while k < n:
        end = min(n, k + step)
        hits = np.flatnonzero(sums[k:end] >= level)
        if hits.size:
            return k + int(hits[0])
        k, step = end, step * 4
    return -1


def _scan_right_gt(sums: np.ndarray, start: int, level: int) -> int:
    return _scan_right_ge(sums, start, level + 1)


def _scan_left_ge(sums: np.ndarray, start: int, level: int) -> int:
    """Largest index ``k <= start`` with ``sums[k] >= level``, or -1."""
    k, step = start, _FIRST_CHUNK
    while k >= 0:
        begin = max(0, k - step + 1)
        hits = np.flatnonzero(sums[begin:k + 1] >= level)
        if hits.size:
            return begin + int(hits[-1])
        k, step = begin - 1, step * 4
    return -1


def _check_vertex(w: Window, i: int) -> int:
    if not w.lo <= i <= w.hi:
        raise IndexError(f"vertex {i} outside [{w.lo}, {w.hi}]")
    return i - w.lo


# ---------------------------------------------------------------------------
# Record map and relatives


def record_map(w: Window, i: int) -> Resolved:
    """``R(i)``; censored when every in-window sum from ``i`` is negative."""
    a = _check_vertex(w, i)
    s = int(w.sums[a])
    k = _scan_right_ge(w.sums, a + 1, s)
    if k >= 0:
        return Value(k + w.lo)
    if w.right_below(s):
        return Value(i)
    return CENSORED


def record_iterate(w: Window, i: int, n: int) -> Resolved:
    """``R^n(i)``; ``R^0(i) = i``."""
    if n < 0:
        raise ValueError("n must be non-negative")
    _check_vertex(w, i)
    cur = i
    for _ in range(n):
        r = record_map(w, cur)
        if r.censored:
            return r
        if r.value == cur:
            break
        cur = r.value
    return Value(cur)


def L_of(w: Window, i: int) -> Resolved:
    """``L(i)``: descendants of ``i`` are exactly ``[L(i), i)``.

    Resolved to a finite value once a position ``k < i`` with ``S_k > S_i`` is
    seen in the window (then ``L = k + 1``); resolved to ``-inf`` only under a
    left certificate.
    """
    a = _check_vertex(w, i)
    s = int(w.sums[a])
    k = _scan_left_ge(w.sums, a - 1, s + 1)
    if k >= 0:
        return Value(k + 1 + w.lo)
    if w.left_bounded_by(s):
        return Value(NEG_INF)
    return CENSORED


def descendants_of(w: Window, i: int) -> Resolved:
    """All descendants of ``i`` as a range, when that set is finite and certain."""
    lv = L_of(w, i)
    if lv.censored or lv.value == NEG_INF:
        return Censored("infinite" if not lv.censored else None)
    return Value(range(int(lv.value), i))


def interval_property_check(w: Window, i: int) -> bool:
    """Check ``[i, R(i)) ⊆ D(R(i))`` by following record chains inside the window."""
    r = record_map(w, i)
    if r.censored or r.value == i:
        raise ValueError("R(i) must be resolved and distinct from i")
    j = r.value
    for k in range(i, j):
        cur = k
        while cur < j:
            nxt = record_map(w, cur)
            if nxt.censored or nxt.value == cur:
                return False
            cur = nxt.value
        if cur != j:
            return False
    return True


def _prefix_max(w: Window, a: int) -> Optional[int]:
    """``max S_m`` over array indices ``[0, a)``, or None when empty."""
    if a <= 0:
        return None
    return int(w.sums[:a].max())


def type_of(w: Window, i: int) -> Resolved:
    """``t(i) = inf_{m < i} max(y(m, i), -1)``.

    ``-1`` is certain as soon as some in-window ``m < i`` has ``S_m > S_i``.  A
    value ``>= 0`` needs a certificate on the unseen left tail.  Censored
    results carry the in-window running minimum as ``hint``.
    """
    a = _check_vertex(w, i)
    s = int(w.sums[a])
    if _scan_left_ge(w.sums, a - 1, s + 1) >= 0:
        return Value(-1)
    top = _prefix_max(w, a)
    if top is not None and w.left_bounded_by(top):
        return Value(s - top)
    return Censored(None if top is None else s - top)


def all_types(w: Window) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised :func:`type_of` for every vertex: ``(values, resolved)``."""
    n = len(w.sums)
    values = np.full(n, -1, dtype=np.int64)
    resolved = np.zeros(n, dtype=bool)
    if n > 1:
        pm = np.maximum.accumulate(w.sums[:-1])
        s = w.sums[1:]
        neg = pm > s
        values[1:] = np.where(neg, -1, s - pm)
        resolved[1:] = neg
        s_lo = int(w.sums[0])
        ok = np.zeros(n - 1, dtype=bool)
        if w.left_sup is not None:
            ok |= s_lo + w.left_sup <= pm
        if w.left_margin is not None:
            ok |= pm - s_lo >= w.left_margin
        resolved[1:] |= ok
    return values, resolved


def l_of(w: Window, i: int) -> Resolved:
    """``l(i) = sup{m < i : y(m, i) = t(i)}``."""
    t = type_of(w, i)
    if t.censored:
        return CENSORED
    a = i - w.lo
    s = int(w.sums[a])
    # Going left the sums rise by at most one per step, so the first visit of
    # level s - t is the largest m with y(m, i) = t.
    k = _scan_left_ge(w.sums, a - 1, s - max(t.value, -1))
    if k < 0:
        return CENSORED
    return Value(k + w.lo)


def offspring_count(w: Window, i: int) -> Resolved:
    """``d_1(i)``, the number of ``j`` with ``R(j) = i``.

    Equals ``x_{i-1} + 1`` when ``t(i) = -1``, and ``x_{i-1} + 1 - t(i)`` when
    ``t(i) >= 0``.  It is already certain when some in-window ``m < i`` has
    ``S_m >= S_i`` (then ``t(i) <= 0``, so both forms agree).
    """
    a = _check_vertex(w, i)
    if a == 0:
        return CENSORED
    x = int(w.marks[a - 1])
    s = int(w.sums[a])
    if _scan_left_ge(w.sums, a - 1, s) >= 0:
        return Value(x + 1)
    t = type_of(w, i)
    if t.censored:
        return CENSORED
    return Value(x + 1 - max(t.value, 0))


def children_positions(w: Window, i: int) -> Resolved:
    """Children of ``i`` in increasing position.

    The m-th child counted from the largest is the largest ``i' < i`` with
    ``y(i', i) = x_{i-1} + 1 - m``.
    """
    d1 = offspring_count(w, i)
    if d1.censored:
        return CENSORED
    d = d1.value
    if d == 0:
        return Value([])
    a = i - w.lo
    base = int(w.sums[a - 1])
    top_level = base + d - 1
    k_top = _scan_left_ge(w.sums, a - 1, top_level)
    seg = w.sums[k_top:a][::-1]
    runmax = np.maximum.accumulate(seg)
    fresh = np.flatnonzero(seg[1:] > runmax[:-1]) + 1
    idx = np.concatenate(([0], fresh))
    if len(idx) != d or int(seg[idx[-1]]) != top_level:
        raise AssertionError(f"children scan of {i} found {len(idx)} children, expected {d}")
    positions = (a - 1 - idx)[::-1] + w.lo
    return Value([int(p) for p in positions])


def record_chain(w: Window, i: int, n: int) -> list:
    """Up to ``n`` ancestors of ``i`` (stops at censoring or a self-loop)."""
    out = []
    cur = i
    for _ in range(n):
        r = record_map(w, cur)
        if r.censored or r.value == cur:
            break
        cur = r.value
        out.append(cur)
    return out


# ---------------------------------------------------------------------------
# Whole-window record graph


@dataclass(eq=False)
class RecordGraph:
    """Record graph of a window: successor, children, censoring flags.

    Vertices are the positions ``lo .. hi``.  ``succ[a]`` holds the position of
    ``R`` for array index ``a`` (``R(i) = i`` for certified self-loops) and is
    meaningful only where ``censored[a]`` is False.  Children are stored in
    compressed form: those of index ``a`` are ``child_pos[child_ptr[a]:child_ptr[a + 1]]``.
    """

    window: Window
    succ: np.ndarray
    censored: np.ndarray
    child_ptr: np.ndarray
    child_pos: np.ndarray
    children_complete: np.ndarray
    strict: bool = False

    @property
    def lo(self) -> int:
        return self.window.lo

    @property
    def hi(self) -> int:
        return self.window.hi

    def vertices(self) -> range:
        return range(self.lo, self.hi + 1)

    def child_list(self, a: int) -> list:
        """Children of array index ``a`` as positions."""
        return self.child_pos[self.child_ptr[a]:self.child_ptr[a + 1]].tolist()

    @property
    def offspring(self) -> np.ndarray:
        return np.diff(self.child_ptr)

    @property
    def children_lists(self) -> list:
        return [self.child_list(a) for a in range(len(self.succ))]

    def successor(self, i: int) -> Resolved:
        a = _check_vertex(self.window, i)
        if self.censored[a]:
            return CENSORED
        return Value(int(self.succ[a]))

    def children(self, i: int) -> Resolved:
        a = _check_vertex(self.window, i)
        if not self.children_complete[a]:
            return Censored(self.child_list(a))
        return Value(self.child_list(a))

    def tops(self) -> np.ndarray:
        """For each vertex, the highest in-window ancestor (as a position)."""
        n = len(self.succ)
        top = np.empty(n, dtype=np.int64)
        lo = self.lo
        succ = self.succ.tolist()
        cens = self.censored.tolist()
        for a in range(n - 1, -1, -1):
            if cens[a] or succ[a] == a + lo:
                top[a] = a + lo
            else:
                top[a] = top[succ[a] - lo]
        return top

    def depths(self) -> np.ndarray:
        n = len(self.succ)
        depth = [0] * n
        lo = self.lo
        succ = self.succ.tolist()
        cens = self.censored.tolist()
        for a in range(n - 1, -1, -1):
            if not (cens[a] or succ[a] == a + lo):
                depth[a] = depth[succ[a] - lo] + 1
        return np.asarray(depth, dtype=np.int64)

    def component(self, i: int) -> list:
        """In-window vertices joined to ``i`` by resolved edges, ascending."""
        top = self.tops()
        t = top[i - self.lo]
        return [int(p) for p in np.flatnonzero(top == t) + self.lo]

    def to_json(self) -> dict:
        lo = self.lo
        return {
            "lo": lo,
            "hi": self.hi,
            "successor": [None if c else int(s) for s, c in zip(self.succ, self.censored)],
            "children": {str(a + lo): self.child_list(a) for a in range(len(self.succ))
                         if self.child_ptr[a + 1] > self.child_ptr[a]},
            "children_complete": [bool(v) for v in self.children_complete],
        }


def _next_up_stack(sums: np.ndarray, strict: bool) -> np.ndarray:
    """First later index with a sum at least (``strict``: above) the current one; -1 if none."""
    vals = sums.tolist()
    n = len(vals)
    out = [-1] * n
    stack: list[int] = []
    for a in range(n - 1, -1, -1):
        s = vals[a]
        if strict:
            while stack and vals[stack[-1]] <= s:
                stack.pop()
        else:
            while stack and vals[stack[-1]] < s:
                stack.pop()
        if stack:
            out[a] = stack[-1]
        stack.append(a)
    return np.asarray(out, dtype=np.int64)


_MAX_EVENT_STEP = 64


def _next_up_skip_free(sums: np.ndarray, strict: bool) -> np.ndarray:
    """Vectorised ``_next_up_stack`` for walks whose down-steps are exactly -1.

    Moving right such a walk reaches a higher level only by an up-step, and an
    up-step from ``S_{j-1}`` to ``S_j`` crosses each level of ``(S_{j-1}, S_j]``.
    Listing these crossings as sorted ``(level, j)`` keys turns every query
    into one binary search.
    """
    n = len(sums)
    out = np.full(n, -1, dtype=np.int64)
    if n < 2:
        return out
    x = np.diff(sums)
    base = sums.min()
    m = n + 1
    up = np.flatnonzero(x > 0)
    rep = x[up]
    pos = np.repeat(up + 1, rep)
    start = np.repeat(sums[up] - base + 1, rep)
    offs = np.arange(pos.size) - np.repeat(np.cumsum(rep) - rep, rep)
    keys = np.sort((start + offs) * m + pos)
    if strict:
        level = sums[:-1] - base + 1
        query = np.arange(n - 1)
    else:
        down = np.flatnonzero(x < 0)
        out[:-1][x >= 0] = np.flatnonzero(x >= 0) + 1
        level = sums[down] - base
        query = down
    if query.size == 0 or keys.size == 0:
        return out
    q = np.searchsorted(keys, level * m + query, side="right")
    hit = q < keys.size
    found = keys[np.minimum(q, keys.size - 1)]
    ok = hit & (found // m == level)
    out[query[ok]] = found[ok] % m
    return out


def build_record_graph(w: Window, strict: bool = False) -> RecordGraph:
    """Record graph of every vertex of the window.

    With ``strict`` the successor is the strict record ``SR`` instead of ``R``;
    it has no self-loops.  Skip-free windows are handled with vectorised
    searches, others with a monotone stack.
    """
    sums = w.sums
    n = len(sums)
    lo = w.lo
    step = int(np.diff(sums).max()) if n > 1 else 0
    if w.skip_free and step <= _MAX_EVENT_STEP:
        nxt = _next_up_skip_free(sums, strict)
    else:
        nxt = _next_up_stack(sums, strict)
    none = nxt < 0
    succ = nxt + lo
    censored = none.copy()
    if not strict and none.any():
        idx = np.flatnonzero(none)
        loops = np.array([w.right_below(int(sums[a])) for a in idx], dtype=bool)
        succ[idx[loops]] = idx[loops] + lo
        censored[idx[loops]] = False
    succ[censored] = lo - 1
    real = ~censored & (succ != np.arange(n) + lo)
    kids = np.flatnonzero(real)
    parent_idx = succ[kids] - lo
    order = np.argsort(parent_idx, kind="stable")
    child_pos = kids[order] + lo
    child_ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(parent_idx, minlength=n), out=child_ptr[1:])
    prefix = np.empty(n, dtype=np.int64)
    prefix[0] = np.iinfo(np.int64).min
    if n > 1:
        prefix[1:] = np.maximum.accumulate(sums[:-1])
    complete = prefix >= sums
    for a in np.flatnonzero(~complete):
        if a > 0 and w.left_bounded_by(int(prefix[a]) - strict):
            complete[a] = True
    return RecordGraph(w, succ, censored, child_ptr, child_pos, complete, strict)


# ---------------------------------------------------------------------------
# Foils


@dataclass(eq=False)
class FoilPartition:
    """Classes of in-window vertices whose record iterates meet in the window.

    ``left_open[f]`` means members below ``lo`` cannot be excluded and
    ``right_open[f]`` means the class may merge with others beyond ``hi``.
    """

    graph: RecordGraph
    foil_of: np.ndarray
    members: list
    left_open: list
    right_open: list

    def foil(self, i: int) -> int:
        return int(self.foil_of[i - self.graph.lo])

    def censored(self, f: int) -> bool:
        return self.left_open[f] or self.right_open[f]

    def same_foil(self, u: int, v: int) -> bool:
        return self.foil(u) == self.foil(v)


def foils(g: RecordGraph) -> FoilPartition:
    w = g.window
    lo = g.lo
    top = g.tops()
    depth = g.depths()
    keys: dict = {}
    foil_of = np.empty(len(top), dtype=np.int64)
    members: list[list[int]] = []
    for a in range(len(top)):
        key = (int(top[a]), int(depth[a]))
        f = keys.get(key)
        if f is None:
            f = len(members)
            keys[key] = f
            members.append([])
        foil_of[a] = f
        members[f].append(a + lo)
    lo_top, lo_depth = int(top[0]), int(depth[0])
    left_all_below_lo = w.left_bounded_by(int(w.sums[0]))
    finite_tree: dict = {}
    left_open, right_open = [], []
    for (t, dpt), f in sorted(keys.items(), key=lambda kv: kv[1]):
        if t not in finite_tree:
            lv = L_of(w, t)
            finite_tree[t] = (not lv.censored) and lv.value != NEG_INF
        ta = t - lo
        clear = finite_tree[t] or (left_all_below_lo and t == lo_top and dpt <= lo_depth)
        left_open.append(not clear)
        right_open.append(bool(g.censored[ta]))
    return FoilPartition(g, foil_of, members, left_open, right_open)


def r_perp(g: RecordGraph, i: int, part: Optional[FoilPartition] = None) -> Resolved:
    """Smallest ``k > i`` in the foil of ``i``; censored if none is in the window."""
    part = part or foils(g)
    ms = part.members[part.foil(i)]
    pos = ms.index(i)
    if pos + 1 < len(ms):
        return Value(ms[pos + 1])
    return CENSORED


def _depths_to_top(seg: np.ndarray, skip_free: bool) -> tuple[np.ndarray, Callable[[int, int], int]]:
    """Generations from each local index to the last one, which must carry the
    maximum of ``seg``.  Also returns ``anc(k, h)``, the ancestor of ``k`` at
    depth ``h``.

    For skip-free walks the ancestors of ``k`` are the ``j > k`` whose last
    strictly higher point on the left, ``l(j)``, lies before ``k``; read
    leftwards the walk climbs one level at a time, so ``l(j)`` is the last
    ``m < j`` with ``S_m = S_j + 1`` and everything vectorises.
    """
    m = len(seg)
    if skip_free:
        idx = np.arange(m, dtype=np.int64)
        lev = seg - seg.min() + 1
        raw = lev * m + idx
        order = np.argsort(raw)
        keys = raw[order]
        # the query for j is raw[j] + m, so queries come sorted in the same order
        q = np.searchsorted(keys, keys + m) - 1
        prev = keys[np.maximum(q, 0)]
        left = np.empty(m, dtype=np.int64)
        left[order] = np.where((q >= 0) & (prev // m == keys // m + 1), prev % m, -1)
        ge = np.bincount(left[left >= 0], minlength=m)[::-1].cumsum()[::-1]
        depth = (m - 1 - idx) - ge

        def anc(k: int, h: int) -> int:
            chain = k + 1 + np.flatnonzero(left[k + 1:] < k)
            return k if len(chain) == h else int(chain[len(chain) - h - 1])

        return depth, anc
    vals = seg.tolist()
    succ = [m - 1] * m
    dep = [0] * m
    stack = [m - 1]
    for k in range(m - 2, -1, -1):
        while vals[stack[-1]] < vals[k]:
            stack.pop()
        succ[k] = stack[-1]
        dep[k] = dep[succ[k]] + 1
        stack.append(k)

    def anc_stack(k: int, h: int) -> int:
        for _ in range(dep[k] - h):
            k = succ[k]
        return k

    return np.asarray(dep, dtype=np.int64), anc_stack


def r_perp_at(w: Window, i: int) -> Resolved:
    """``R_perp(i)``, the smallest later vertex of the same generation, computed
    on the segment from ``i`` to the last in-window maximum ``P`` after it.

    ``P`` is an ancestor of ``i``.  Subtrees are intervals, so the answer is the
    ancestor at ``i``'s depth of the first ``v > i`` at least as deep as ``i``.
    Returns ``Value(None)`` when it is certain that no such vertex exists.
    """
    a = _check_vertex(w, i)
    seg = w.sums[a:]
    top = len(seg) - 1 - int(np.argmax(seg[::-1]))
    if top > 0:
        depth, anc = _depths_to_top(seg[:top + 1], w.skip_free)
        hit = np.flatnonzero(depth[1:] >= depth[0])
        if hit.size:
            return Value(i + anc(int(hit[0]) + 1, int(depth[0])))
    r = record_map(w, i + top)
    if not r.censored and r.value == i + top:
        return Value(None)
    return CENSORED


# ---------------------------------------------------------------------------
# Strict record and climbing point shifts


def strict_record_map(w: Window, i: int) -> Resolved:
    """``SR(i) = min{n > i : y(i, n) > 0}``."""
    a = _check_vertex(w, i)
    k = _scan_right_gt(w.sums, a + 1, int(w.sums[a]))
    return Value(k + w.lo) if k >= 0 else CENSORED


def strict_record_children(w: Window, u: int) -> Resolved:
    """All ``v < u`` with ``SR(v) = u``, ascending."""
    a = _check_vertex(w, u)
    s = int(w.sums[a])
    k0 = _scan_left_ge(w.sums, a - 1, s)
    if k0 < 0:
        inner = _prefix_max(w, a)
        if inner is None or not w.left_bounded_by(inner - 1):
            return CENSORED
    seg = w.sums[k0 + 1:a][::-1]
    if seg.size == 0:
        return Value([])
    runmax = np.maximum.accumulate(seg)
    ok = np.ones(seg.size, dtype=bool)
    ok[1:] = seg[1:] >= runmax[:-1]
    idx = np.flatnonzero(ok)
    return Value([int(p) for p in (a - 1 - idx)[::-1] + w.lo])


def climbing_map(w: Window, i: int, margin: int) -> Resolved:
    """``C(i)``: first position after ``i`` of the minimum of ``S`` on ``(i, inf)``.

    The candidate is the first minimiser on ``(i, hi]``; it is returned only if
    ``S_hi - S_k >= margin``.  For positive drift the chance that the unseen
    future undercuts it is at most ``c^(margin + 1)``.
    """
    if margin < 0:
        raise ValueError("margin must be non-negative")
    a = _check_vertex(w, i)
    if a + 1 >= len(w.sums):
        return CENSORED
    tail = w.sums[a + 1:]
    k = int(np.argmin(tail))
    if int(w.sums[-1]) - int(tail[k]) >= margin:
        return Value(a + 1 + k + w.lo)
    return CENSORED


def climbing_children(w: Window, u: int, margin: int) -> Resolved:
    """All ``v`` with ``C(v) = u``: the block ``[p, u)`` after the last ``S_p <= S_u``."""
    a = _check_vertex(w, u)
    s = int(w.sums[a])
    tail = w.sums[a + 1:]
    if tail.size and int(tail.min()) < s:
        return Value([])
    if int(w.sums[-1]) - s < margin:
        return CENSORED
    below = np.flatnonzero(w.sums[:a] <= s)
    if below.size == 0:
        return CENSORED
    p = int(below[-1])
    return Value(list(range(p + w.lo, u)))


# ---------------------------------------------------------------------------
# Tree views of shift graphs


class ShiftTreeView:
    """Lazy family-tree view of a vertex-shift graph on a window.

    Nodes are positions.  ``parent``/``children`` raise
    :class:`~recordwalk.seq.CensoredError` when the window cannot decide them.
    Children are ordered by position.
    """

    def __init__(self, w: Window, root: int = 0, *, shift: str = "record", margin: int = 0,
                 with_types: bool = False):
        if shift not in ("record", "strict", "climbing"):
            raise ValueError(f"unknown shift {shift!r}")
        self.window = w
        self.root = root
        self.shift = shift
        self.margin = margin
        self.with_types = with_types
        self._parent: dict = {}
        self._children: dict = {}
        self._marks: dict = {}

    def _succ(self, u: int) -> Resolved:
        if self.shift == "record":
            return record_map(self.window, u)
        if self.shift == "strict":
            return strict_record_map(self.window, u)
        return climbing_map(self.window, u, self.margin)

    def parent(self, u: int) -> Optional[int]:
        if u not in self._parent:
            if not self.window.lo <= u <= self.window.hi:
                raise CensoredError(u)
            r = self._succ(u)
            if r.censored:
                raise CensoredError(u)
            self._parent[u] = None if r.value == u else r.value
        return self._parent[u]

    def children(self, u: int) -> list:
        if u not in self._children:
            if not self.window.lo <= u <= self.window.hi:
                raise CensoredError(u)
            if self.shift == "record":
                r = children_positions(self.window, u)
            elif self.shift == "strict":
                r = strict_record_children(self.window, u)
            else:
                r = climbing_children(self.window, u, self.margin)
            if r.censored:
                raise CensoredError(u)
            self._children[u] = r.value
        return self._children[u]

    def mark(self, u: int) -> Optional[int]:
        if not self.with_types:
            return None
        if u not in self._marks:
            t = type_of(self.window, u)
            if t.censored:
                raise CensoredError(u)
            self._marks[u] = t.value
        return self._marks[u]


class GraphTreeView:
    """Family-tree view backed by a built :class:`RecordGraph` (fast repeated access)."""

    def __init__(self, g: RecordGraph, root: int = 0, with_types: bool = False):
        self.graph = g
        self.root = root
        self.with_types = with_types
        self._lo = g.lo
        self._n = len(g.succ)
        self._succ = g.succ.tolist()
        self._cens = g.censored.tolist()
        self._complete = g.children_complete.tolist()
        self._kids: dict = {}
        self._types = all_types(g.window) if with_types else None

    def _index(self, u: int) -> int:
        a = u - self._lo
        if not 0 <= a < self._n:
            raise CensoredError(u)
        return a

    def parent(self, u: int) -> Optional[int]:
        a = self._index(u)
        if self._cens[a]:
            raise CensoredError(u)
        s = self._succ[a]
        return None if s == u else s

    def children(self, u: int) -> list:
        kids = self._kids.get(u)
        if kids is None:
            a = self._index(u)
            if not self._complete[a]:
                raise CensoredError(u)
            kids = self._kids[u] = self.graph.child_list(a)
        return kids

    def mark(self, u: int) -> Optional[int]:
        if self._types is None:
            return None
        a = self._index(u)
        if not self._types[1][a]:
            raise CensoredError(u)
        return int(self._types[0][a])
