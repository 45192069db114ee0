"""Tree <-> sequence codecs and the R-probability constructions.

``forward_psi`` reads the component of 0 in the record graph of a window;
``backward_phi`` walks the succession line of a tree and writes
``x_n = d_1(u_{n+1}) - 1``.  The constructions generate the negative side of
the R-probability sequence block by block and tag every mark with the step
that produced it.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .record import (GraphTreeView, RecordGraph, all_types, build_record_graph, foils)
from .seq import (CensoredError, DiscreteLaw, IncrementDistribution, Window, bar_tilde_pi,
                  increment_law, joint_mark_law, offspring_law, size_biased)
from .trees import OrderedTree, SuccessionLine, ball_key, succession_line

# Provenance codes for construction tags (column 0).
IID, HEAD, FILL = 0, 1, 2


# ---------------------------------------------------------------------------
# Forward maps


@dataclass(eq=False)
class MarkedComponent:
    """Component of 0 in a record graph as an arena, with integer positions."""

    tree: OrderedTree
    positions: list
    node_of: dict
    types: Optional[list]
    censored: list = field(default_factory=list)
    top_censored: bool = False

    @property
    def root(self) -> int:
        return self.tree.root

    def to_json(self) -> dict:
        out = self.tree.to_json()
        out["positions"] = list(self.positions)
        out["censored_positions"] = list(self.censored)
        out["top_censored"] = self.top_censored
        return out


def _component(g: RecordGraph, with_types: bool) -> MarkedComponent:
    lo = g.lo
    top = g.tops()
    members = np.flatnonzero(top == top[-lo]) + lo
    positions = [int(p) for p in members]
    node_of = {p: k for k, p in enumerate(positions)}
    types = None
    if with_types:
        vals, ok = all_types(g.window)
        types = [int(vals[p - lo]) if ok[p - lo] else None for p in positions]
    t = OrderedTree()
    for k, p in enumerate(positions):
        t._new(-1, [], None if types is None else types[k])
    censored = []
    for p in positions:
        a = p - lo
        if g.censored[a]:
            censored.append(p)
            continue
        s = int(g.succ[a])
        if s != p:
            t._parent[node_of[p]] = node_of[s]
            t._children[node_of[s]].append(node_of[p])
        if not g.children_complete[a]:
            censored.append(p)
    for p in positions:
        if not g.children_complete[p - lo] and p not in censored:
            censored.append(p)
    t.root = node_of[0]
    top_p = int(top[-lo])
    return MarkedComponent(t, positions, node_of, types, sorted(set(censored)),
                           bool(g.censored[top_p - lo]))


def forward_psi(w: Window) -> MarkedComponent:
    """``Psi_R``: component of 0 in the record graph, children ordered by position."""
    return _component(build_record_graph(w), False)


def forward_psi_hat(w: Window) -> MarkedComponent:
    """``Psi_R`` with the type function attached as marks (None where censored)."""
    return _component(build_record_graph(w), True)


# ---------------------------------------------------------------------------
# Backward maps


def _backward(t, o, span: int, marked: bool, back: Optional[int] = None) -> tuple[Window, SuccessionLine]:
    back = span if back is None else back
    line = succession_line(t, o, max_steps=span, max_back=max(back - 1, 0))

    def marks_of(us) -> list:
        out = []
        try:
            for u in us:
                d1 = len(t.children(u))
                if not marked:
                    out.append(d1 - 1)
                    continue
                m = t.mark(u)
                if m is None:
                    raise ValueError(f"vertex {u} has no mark")
                out.append(d1 - 1 + max(m, 0))
        except CensoredError:
            pass
        return out

    # x_n comes from u_{n+1}: right[m] is x_{m-1}, left[k] is x_{-k-2}.
    right_us = [line.center] + line.forward
    right = marks_of(right_us)
    if not right:
        raise CensoredError(o)
    left_us = line.backward
    left = marks_of(left_us)
    lo = -len(left) - 1
    marks = np.array(left[::-1] + right, dtype=np.int64)
    tags = np.empty(len(marks), dtype=object)
    for k, u in enumerate(left_us[:len(left)][::-1] + right_us[:len(right)]):
        tags[k] = u
    if lo + len(marks) < 0:
        raise CensoredError(o)
    return Window(lo, marks, tags=tags, skip_free=True), line


def backward_phi(t, o, span: int, back: Optional[int] = None) -> Window:
    """``Phi_R``: marks ``x_n = d_1(u_{n+1}) - 1`` along the succession line through ``o``.

    The window covers ``[-back, span]`` (``back`` defaults to ``span``) when the
    line and offspring counts are available; otherwise it is cut where they
    stop.  ``tags[k]`` is the vertex ``u_{n+1}`` behind the mark ``x_n`` with
    ``n = lo + k``.
    """
    return _backward(t, o, span, False, back)[0]


def backward_phi_hat(t, o, span: int, back: Optional[int] = None) -> Window:
    """``Phi_R`` extended by marks: ``x_n = d_1(u_{n+1}) + M(u_{n+1}) - 1`` on the
    path (mark >= 0) and ``d_1(u_{n+1}) - 1`` elsewhere (mark -1)."""
    return _backward(t, o, span, True, back)[0]


@dataclass
class RoundTripReport:
    core_lo: int
    core_hi: int
    mismatches: list

    @property
    def ok(self) -> bool:
        return not self.mismatches

    def to_json(self) -> dict:
        return {"core_lo": self.core_lo, "core_hi": self.core_hi, "mismatches": self.mismatches}


def roundtrip_psi_phi(w: Window, marked: bool = False) -> RoundTripReport:
    """Apply ``Psi`` then ``Phi`` and compare with the input on the uncensored core.

    The core is the run of indices where the succession line of the record
    graph, and every offspring count (and type) it reads, is resolved.  Each
    mismatch is ``[n, expected, got]``; a vertex ``u_n != n`` is reported
    with expected ``n``.

    The unmarked map reads ``x_n = d_1(u_{n+1}) - 1``, which holds where the
    type ``t(n + 1)`` is -1.  On windows with a left certificate nonnegative
    types resolve, so use ``marked=True`` there.
    """
    g = build_record_graph(w)
    view = GraphTreeView(g, 0, with_types=marked)
    span = max(-w.lo, w.hi)
    try:
        y, _ = _backward(view, 0, span, marked)
    except CensoredError:
        return RoundTripReport(0, 0, [])
    core_lo, core_hi = max(y.lo, w.lo), min(y.hi, w.hi)
    mismatches = []
    for n in range(core_lo, core_hi):
        k = n - y.lo
        if y.tags[k] != n + 1:
            mismatches.append(["vertex", n + 1, int(y.tags[k])])
        elif int(y.marks[k]) != w.x(n):
            mismatches.append([n, w.x(n), int(y.marks[k])])
    return RoundTripReport(core_lo, core_hi, mismatches)


def roundtrip_phi_psi(t, o, span: int, radius: int, mode: str = "ordered",
                      marked: bool = False) -> bool:
    """``Psi(Phi(T, o))`` against ``(T, o)`` on radius-``radius`` balls."""
    y = backward_phi_hat(t, o, span) if marked else backward_phi(t, o, span)
    g = build_record_graph(y)
    view = GraphTreeView(g, 0, with_types=marked)
    return ball_key(view, 0, radius, mode) == ball_key(t, o, radius, mode)


# ---------------------------------------------------------------------------
# Constructions of the R-probability sequence


@dataclass
class _Blocks:
    marks: list = field(default_factory=list)
    tags: list = field(default_factory=list)
    complete_len: int = 0
    complete_blocks: int = 0
    head_k: list = field(default_factory=list)


def _fill(block: _Blocks, rng, law: DiscreteLaw, start_level: int, target: int,
          limit: int, tag_block: int) -> bool:
    """Append in-fill marks (walking the level down by each mark) until the
    level first reaches ``target`` from below; stop early at ``limit`` marks."""
    level = start_level
    chunk = 64
    while level < target:
        room = limit - len(block.marks)
        if room <= 0:
            return False
        xs = law.sample(rng, min(chunk, room))
        levels = level - np.cumsum(xs)
        hit = np.flatnonzero(levels >= target)
        take = int(hit[0]) + 1 if hit.size else len(xs)
        block.marks.extend(int(v) for v in xs[:take])
        block.tags.extend([(FILL, tag_block, -1)] * take)
        level = int(levels[take - 1])
        chunk *= 2
    return True


def _assemble(d: IncrementDistribution, span: int, rng, blk: _Blocks, finished: bool,
              cut_to_boundary: bool) -> Window:
    neg = blk.marks
    tags = blk.tags
    boundary = finished
    if cut_to_boundary and not finished:
        neg = neg[:blk.complete_len]
        tags = tags[:blk.complete_len]
        boundary = True
    pos = d.sample(rng, span)
    marks = np.concatenate([np.asarray(neg[::-1], dtype=np.int64), pos])
    tag_arr = np.array(list(reversed(tags)) + [(IID, -1, -1)] * span, dtype=np.int64)
    tag_arr = tag_arr.reshape(-1, 3)
    return Window(-len(neg), marks, left_sup=0 if boundary else None, tags=tag_arr)


def construction1_zero_mean(d: IncrementDistribution, span: int, rng: np.random.Generator,
                            cut_to_boundary: bool = False) -> Window:
    """R-probability sequence for zero mean, looping over the seven steps.

    ``Y_l = Z - 1`` with ``Z ~ pi_hat``, ``K`` uniform on ``{0..Y_l}``, then
    i.i.d. in-fill until the level returns to ``-K``.  The nonnegative side is
    i.i.d.  When ``span`` ends mid-block the left end carries no certificate;
    ``cut_to_boundary`` trims back to the last completed block instead, which
    certifies ``S_m <= S_lo`` for all ``m < lo``.  Tags are rows
    ``(code, block, K)``.
    """
    if abs(d.mean) > 1e-12:
        raise ValueError("construction 1 needs mean zero")
    hat = size_biased(offspring_law(d))
    blk = _Blocks()
    nblock = 0
    finished = True
    while len(blk.marks) < span:
        nblock += 1
        y_l = hat.draw(rng) - 1
        k = int(rng.integers(y_l + 1))
        blk.marks.append(y_l)
        blk.tags.append((HEAD, nblock, k))
        blk.head_k.append(k)
        # W starts at -Y_l and moves by -Z per in-fill; tau is the first return to -K.
        finished = _fill(blk, rng, d, -y_l, -k, span, nblock)
        if finished:
            blk.complete_len = len(blk.marks)
            blk.complete_blocks = nblock
    return _assemble(d, span, rng, blk, finished and len(blk.marks) == blk.complete_len,
                     cut_to_boundary)


def construction2_zero_mean(d: IncrementDistribution, span: int, rng: np.random.Generator,
                            cut_to_boundary: bool = False) -> Window:
    """R-probability sequence for zero mean from i.i.d. tuples ``(Z_n, K_n)``.

    ``P[Z_n = b] = pi_hat(b + 1)``, ``K_n | Z_n`` uniform on ``{0..Z_n}``, and the
    block ``(Z_n, X_1, .., X_tau)`` ends at the first ``m >= 0`` with
    ``-Z_n - (X_1 + .. + X_m) >= -K_n``.
    """
    if abs(d.mean) > 1e-12:
        raise ValueError("construction 2 needs mean zero")
    hat = size_biased(offspring_law(d))
    z_law = DiscreteLaw({b - 1: p for b, p in hat.mass.items()})
    blk = _Blocks()
    finished = True
    n = 0
    batch = 16
    while len(blk.marks) < span:
        zs = z_law.sample(rng, batch)
        ks = np.floor(rng.random(batch) * (zs + 1)).astype(np.int64)
        for z, k in zip(zs.tolist(), ks.tolist()):
            if len(blk.marks) >= span:
                break
            n += 1
            blk.marks.append(z)
            blk.tags.append((HEAD, n, k))
            blk.head_k.append(k)
            finished = _fill(blk, rng, d, -z, -k, span, n)
            if finished:
                blk.complete_len = len(blk.marks)
                blk.complete_blocks = n
    return _assemble(d, span, rng, blk, finished and len(blk.marks) == blk.complete_len,
                     cut_to_boundary)


def construction_positive_mean(d: IncrementDistribution, span: int,
                               rng: np.random.Generator) -> Window:
    """R-probability sequence for positive mean.

    Blocks ``(Z_n + K_n, X_1, .., X_tau)`` with ``P[K = m, Z = l] = P[X_0 = m + l] c^l``
    and in-fill ``P[X = k] = pi_tilde(k + 1)``; ``tau`` is the first ``m >= 0``
    with ``-Z_n - (X_1 + .. + X_m) = 0``.  Blocks are always completed, so the
    window starts at a block boundary and certifies ``S_m <= S_lo`` for ``m < lo``.
    """
    if d.mean <= 0:
        raise ValueError("positive-mean construction needs mean > 0")
    joint = joint_mark_law(d)
    pairs = sorted(joint)
    pick = DiscreteLaw.normalised({i: joint[pr] for i, pr in enumerate(pairs)})
    _, tilde = bar_tilde_pi(d)
    fill_law = increment_law(tilde)
    blk = _Blocks()
    n = 0
    while len(blk.marks) < span:
        n += 1
        k, z = pairs[pick.draw(rng)]
        blk.marks.append(z + k)
        blk.tags.append((HEAD, n, k))
        blk.head_k.append(k)
        _fill(blk, rng, fill_law, -z, 0, 1 << 62, n)
        blk.complete_len = len(blk.marks)
        blk.complete_blocks = n
    return _assemble(d, span, rng, blk, True, False)


def block_boundaries(w: Window) -> list:
    """Positions at the left end of each completed block, nearest to 0 first,
    with the cumulative ``K`` sum expected there: ``[(position, K_1 + .. + K_n)]``."""
    if w.tags is None:
        raise ValueError("window has no construction tags")
    tags = np.asarray(w.tags)
    heads = [w.lo + int(k) for k in np.flatnonzero(tags[:, 0] == HEAD)]
    heads.sort(reverse=True)
    out = []
    total = 0
    for idx, h in enumerate(heads):
        total += int(tags[h - w.lo, 2])
        nxt = heads[idx + 1] + 1 if idx + 1 < len(heads) else w.lo
        complete = idx + 1 < len(heads) or w.left_sup is not None
        if complete:
            out.append((nxt if idx + 1 < len(heads) else w.lo, total))
    return out


# ---------------------------------------------------------------------------
# Foil minimality on R-probability windows


@dataclass
class FoilMinimalityReport:
    checked: int = 0
    structural: int = 0
    oracle: int = 0
    violations: list = field(default_factory=list)


def _chain_foil_min(w: Window, g: RecordGraph, j: int) -> Optional[int]:
    """Brute-force: smallest in-window ``v <= j`` whose iterates meet those of
    ``j`` at the same step, following successors one step at a time."""
    lo = g.lo
    succ = g.succ
    cen = g.censored

    def chain(v):
        out = [v]
        while True:
            a = out[-1] - lo
            if cen[a] or int(succ[a]) == out[-1]:
                return out
            out.append(int(succ[a]))

    cj = chain(j)
    for v in range(lo, j + 1):
        cv = chain(v)
        for n in range(min(len(cv), len(cj))):
            if cv[n] == cj[n]:
                return v
    return None


def foil_minimality_check(w: Window, oracle_samples: int = 3,
                          rng: Optional[np.random.Generator] = None,
                          report: Optional[FoilMinimalityReport] = None) -> FoilMinimalityReport:
    """Check that every boundary-clear foil of a certified R-probability window
    has the minimal element predicted by the ``k``-argument.

    Needs ``left_sup = 0`` (every ``m < lo`` lies below ``S_lo``, so it is a
    descendant of ``lo``).  A foil is boundary-clear when ``lo`` and its
    members share an in-window top and the foil's generation is not below
    that of ``lo``; then no member lies left of ``lo``.
    """
    if w.left_sup != 0:
        raise ValueError("needs a window certified at a block boundary")
    rep = report or FoilMinimalityReport()
    g = build_record_graph(w)
    part = foils(g)
    top, depth = g.tops(), g.depths()
    lo = g.lo
    sums = w.sums
    t_lo, d_lo = int(top[0]), int(depth[0])
    members_by_foil = part.members
    clear = [int(p) for p in np.flatnonzero((top == t_lo) & (depth <= d_lo)) + lo]
    sampled = set()
    if rng is not None and clear and oracle_samples:
        sampled = set(rng.choice(clear, size=min(oracle_samples, len(clear)), replace=False).tolist())
    for j in clear:
        rep.checked += 1
        foil_members = members_by_foil[part.foil(j)]
        m_part = foil_members[0]
        sj = int(sums[j - lo])
        if sj > int(sums[0]):
            rep.structural += 1
            # k = min{n <= j : S_n >= S_j}; everything left of k lies below S_j.
            k = int(np.flatnonzero(sums[:j - lo + 1] >= sj)[0]) + lo
            # climb both chains to their first meeting point R^a(k) = R^b(j)
            anc_k = {}
            cur, a = k, 0
            while True:
                anc_k[cur] = a
                nxt = int(g.succ[cur - lo])
                if g.censored[cur - lo] or nxt == cur:
                    break
                cur, a = nxt, a + 1
            cur, b = j, 0
            while cur not in anc_k:
                cur = int(g.succ[cur - lo])
                b += 1
            a = anc_k[cur]
            if b == 0:
                predicted = j
            else:
                # the foil sits b - a generations below k; above k it has no
                # members left of k
                gen = [k] if b >= a else []
                for _ in range(b - a):
                    gen = [c for v in gen for c in g.child_list(v - lo)]
                below = [v for v in foil_members if v < k]
                if any(v not in gen for v in below):
                    rep.violations.append({"j": j, "reason": "member below k not a descendant"})
                between = [v for v in foil_members if k <= v <= j]
                predicted = min(gen + between)
            if predicted != m_part:
                rep.violations.append({"j": j, "k": k, "predicted": predicted, "partition": m_part})
        if j in sampled:
            rep.oracle += 1
            m_chain = _chain_foil_min(w, g, j)
            if m_chain != m_part:
                rep.violations.append({"j": j, "oracle": m_chain, "partition": m_part})
    return rep
