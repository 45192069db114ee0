"""Monte Carlo harness: empirical laws, TV distance, chi-square, and the checks.

Every ``check_*`` returns a :class:`TestReport` that is reproducible from its
seed.  Censored observations are never compared; windows are escalated
(doubled on both sides) until the quantity resolves or a length cap is hit,
and the censored fraction is part of the report.
"""
from __future__ import annotations

import itertools
import math
import time
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Callable, Hashable, Iterable, Mapping, Optional

import numpy as np
from scipy import stats

from .record import (GraphTreeView, ShiftTreeView, all_types, build_record_graph,
                     children_positions, L_of, r_perp_at, record_iterate, record_map)
from .samplers import TreeOverflow
from .seq import (CensoredError, IncrementDistribution, Window, extend_window, hitting_prob_c,
                  joint_mark_law, offspring_law, sample_window, upward_ratio)
from .trees import ball, ball_key, parent_shift, succession_line
from .transforms import backward_phi, construction_positive_mean

ALPHA = 0.01


# ---------------------------------------------------------------------------
# Empirical laws and reports


class EmpiricalDistribution:
    """Counts of hashable keys under one key schema."""

    def __init__(self, schema: str = "key", counts: Optional[Mapping] = None):
        self.schema = schema
        self.counts: Counter = Counter(counts or {})

    @classmethod
    def from_samples(cls, keys: Iterable[Hashable], schema: str = "key") -> "EmpiricalDistribution":
        return cls(schema, Counter(keys))

    def add(self, key: Hashable, n: int = 1) -> None:
        self.counts[key] += n

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def probs(self) -> dict:
        tot = self.total
        return {k: v / tot for k, v in self.counts.items()}

    def __len__(self) -> int:
        return len(self.counts)

    def rows(self, expected: Optional[Mapping] = None) -> list:
        """``(key, observed, expected_count)`` rows, for CSV export."""
        tot = self.total
        keys = set(self.counts) | set(expected or {})
        out = []
        for k in sorted(keys, key=repr):
            e = None if expected is None else expected.get(k, 0.0) * tot
            out.append((k, self.counts.get(k, 0), e))
        return out


@dataclass
class TestReport:
    name: str
    statistic: float
    threshold: float
    passed: bool
    n_samples: int
    seed: Optional[int] = None
    runtime: float = 0.0
    censored_fraction: float = 0.0
    details: dict = field(default_factory=dict)

    __test__ = False

    def to_json(self) -> dict:
        out = asdict(self)
        out["details"] = _jsonable(self.details)
        return out

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return (f"{verdict} {self.name}: statistic={self.statistic:.6g} threshold={self.threshold:.6g} "
                f"n={self.n_samples} censored={self.censored_fraction:.4f} time={self.runtime:.1f}s")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, bytes):
        return obj.decode("ascii", "replace")
    return obj


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _seed_of(seed) -> Optional[int]:
    return seed if isinstance(seed, int) else None


def tv_distance(p: EmpiricalDistribution, q) -> float:
    """Total variation ``1/2 sum |p - q|``; ``q`` may be a closed-form dict of probabilities."""
    if isinstance(q, EmpiricalDistribution):
        if q.schema != p.schema:
            raise ValueError(f"schema mismatch: {p.schema} vs {q.schema}")
        qp = q.probs()
    else:
        qp = dict(q)
    pp = p.probs()
    keys = set(pp) | set(qp)
    return 0.5 * sum(abs(pp.get(k, 0.0) - qp.get(k, 0.0)) for k in keys)


def chi_square_gof(emp: EmpiricalDistribution, ref: Mapping, min_bin: float = 5.0,
                   alpha: float = ALPHA, name: str = "chi-square") -> TestReport:
    """Pearson goodness of fit.  Bins with expected count below ``min_bin`` are
    pooled together with any mass outside ``ref``."""
    n = emp.total
    if n == 0:
        raise ValueError("empty sample")
    obs, exp = [], []
    pool_o = pool_e = 0.0
    for k, p in ref.items():
        e = p * n
        o = emp.counts.get(k, 0)
        if e < min_bin:
            pool_o += o
            pool_e += e
        else:
            obs.append(o)
            exp.append(e)
    foreign = sum(v for k, v in emp.counts.items() if k not in ref)
    leftover = max(0.0, n - sum(exp) - pool_e)
    if foreign and leftover < 1e-9 * n:
        # keys the reference gives no mass at all
        return TestReport(name, 0.0, alpha, False, n,
                          details={"chi2": math.inf, "dof": None, "outside_support": foreign})
    pool_o += foreign
    pool_e += leftover
    if pool_e >= min_bin:
        obs.append(pool_o)
        exp.append(pool_e)
    elif pool_o > 0 or pool_e > 0:
        if not exp:
            raise ValueError("no bin reaches the minimum expected count")
        obs[-1] += pool_o
        exp[-1] += pool_e
    dof = len(obs) - 1
    if dof < 1:
        raise ValueError("chi-square needs at least two bins")
    obs_a, exp_a = np.asarray(obs, float), np.asarray(exp, float)
    stat = float(((obs_a - exp_a) ** 2 / exp_a).sum())
    pval = float(stats.chi2.sf(stat, dof))
    return TestReport(name, pval, alpha, pval > alpha, n, details={"chi2": stat, "dof": dof})


def paired_rows(a: EmpiricalDistribution, b: EmpiricalDistribution) -> list:
    """``(key, count_a, count_b)`` over the union of keys, for CSV export."""
    keys = set(a.counts) | set(b.counts)
    return [(k, a.counts.get(k, 0), b.counts.get(k, 0)) for k in sorted(keys, key=repr)]


def _z(count: int, n: int, p: float) -> float:
    sd = math.sqrt(max(p * (1 - p), 1e-300) / n)
    return (count / n - p) / sd


# ---------------------------------------------------------------------------
# Escalating windows


def escalate(d: IncrementDistribution, rng: np.random.Generator, fn: Callable[[Window], object],
             lo: int = -32, hi: int = 32, max_len: int = 1 << 16, *,
             left_margin: Optional[int] = None, right_margin: Optional[int] = None,
             grow_left: bool = True, grow_right: bool = True):
    """Evaluate ``fn`` on an i.i.d. window, doubling it while ``fn`` raises
    :class:`CensoredError`.  Returns ``(value, window)`` or ``(None, window)``."""
    w = sample_window(d, lo, hi, rng, left_margin=left_margin, right_margin=right_margin)
    while True:
        try:
            return fn(w), w
        except CensoredError:
            if len(w) >= max_len:
                return None, w
            w = extend_window(w, d, rng, left=(-w.lo or 1) if grow_left else 0,
                              right=(w.hi or 1) if grow_right else 0)


def _certifying_margin(ratio: float, err: float = 1e-9) -> int:
    return int(math.ceil(math.log(err) / math.log(ratio)))


# ---------------------------------------------------------------------------
# Walk simulations


def _first_passage(d: IncrementDistribution, n: int, rng: np.random.Generator, *,
                   up=None, down=None, cap: int = 1 << 20, start_chunk: int = 64):
    """Run ``n`` walks from 0 until ``S >= up`` or ``S <= down`` (first ``m >= 1``).

    Barriers are scalars or per-walk arrays.  Returns ``(time, level, last_step,
    outcome)``; outcome is 1 for the upper barrier, -1 for the lower one and 0
    for runs cut at ``cap``.
    """
    up_a = None if up is None else np.broadcast_to(np.asarray(up, dtype=np.int64), (n,))
    down_a = None if down is None else np.broadcast_to(np.asarray(down, dtype=np.int64), (n,))
    t = np.zeros(n, dtype=np.int64)
    level = np.zeros(n, dtype=np.int64)
    last = np.zeros(n, dtype=np.int64)
    outcome = np.zeros(n, dtype=np.int8)
    alive = np.arange(n)
    chunk = start_chunk
    steps = 0
    while alive.size and steps < cap:
        m = min(chunk, cap - steps)
        xs = d.sample(rng, (alive.size, m))
        path = level[alive, None] + np.cumsum(xs, axis=1)
        hit_up = path >= up_a[alive, None] if up_a is not None else np.zeros(path.shape, bool)
        hit = hit_up | (path <= down_a[alive, None]) if down_a is not None else hit_up
        any_hit = hit.any(axis=1)
        rows = np.flatnonzero(any_hit)
        f = np.argmax(hit[rows], axis=1)
        done = alive[rows]
        t[done] += f + 1
        level[done] = path[rows, f]
        last[done] = xs[rows, f]
        outcome[done] = np.where(hit_up[rows, f], 1, -1)
        keep = ~any_hit
        rest = alive[keep]
        t[rest] += m
        level[rest] = path[keep, -1]
        last[rest] = xs[keep, -1]
        alive = rest
        steps += m
        chunk = min(chunk * 2, 4096)
    return t, level, last, outcome


def check_hitting_powers(d: IncrementDistribution, k_max: int, N: int, seed=0,
                         k_min: int = 1) -> TestReport:
    """Empirical ``P[a walk started at distance k above -1 ever reaches -1]``
    against ``c^k``, for ``k = k_min .. k_max``.

    A run that climbs ``h`` above its start is declared escaped; the neglected
    return probability is at most ``c^h <= 1e-9``.
    """
    t0 = time.time()
    rng = _rng(seed)
    c = hitting_prob_c(d)
    if c >= 1:
        raise ValueError("needs positive mean")
    h = _certifying_margin(c)
    zs, freqs, table = {}, {}, []
    for k in range(k_min, k_max + 1):
        _, _, _, out = _first_passage(d, N, rng, up=h, down=-k)
        hits = int((out == -1).sum())
        freqs[k] = hits / N
        table.append((k, hits, N * c ** k))
        zs[k] = _z(hits, N, c ** k)
    worst = max(abs(v) for v in zs.values())
    return TestReport("hitting-powers", worst, 3.0, worst < 3.0, N, _seed_of(seed), time.time() - t0,
                      details={"c": c, "freq": freqs, "expected": {k: c ** k for k in freqs}, "z": zs,
                               "table": table})


def tau_joint_law(d: IncrementDistribution) -> dict:
    """``P[tau < inf, S_tau = j, X_{tau-1} = k] = P[X_0 = k] c^(k - j)`` for ``0 <= j <= k``."""
    c = hitting_prob_c(d)
    out = {}
    for k, p in d.mass.items():
        for j in range(0, k + 1):
            out[(j, k)] = float(p) * c ** (k - j)
    return out


def check_tau_joint_law(d: IncrementDistribution, N: int, seed=0, cap: int = 1 << 14) -> TestReport:
    """``tau = inf{m >= 1 : S_m >= 0}``; chi-square of ``(S_tau, X_{tau-1})``
    including the mass of ``tau = inf``.  For negative drift a run that falls
    ``h`` below 0 is declared ``tau = inf`` with error ``rho^h <= 1e-9``; for
    zero drift runs still open at ``cap`` are censored."""
    t0 = time.time()
    rng = _rng(seed)
    mean = d.mean
    down = None
    if mean < 0:
        down = -_certifying_margin(upward_ratio(d))
    _, level, last, out = _first_passage(d, N, rng, up=0, down=down, cap=cap)
    resolved = out != 0
    n_res = int(resolved.sum())
    cens = 1 - n_res / N
    emp = EmpiricalDistribution("tau-joint")
    for lv, x, o in zip(level[resolved].tolist(), last[resolved].tolist(), out[resolved].tolist()):
        emp.add((lv, x) if o == 1 else "inf")
    ref = tau_joint_law(d)
    finite = sum(ref.values())
    if finite < 1 - 1e-12:
        ref["inf"] = 1 - finite
    rep = chi_square_gof(emp, ref, name="tau-joint-law")
    marg_z = {}
    if mean < 0:
        for k, p in d.mass.items():
            cnt = sum(v for key, v in emp.counts.items() if key != "inf" and key[1] == k)
            marg_z[k] = _z(cnt, n_res, (k + 1) * float(p))
    passed = rep.passed and cens < 0.01 and all(abs(z) < 3 for z in marg_z.values())
    return TestReport("tau-joint-law", rep.statistic, ALPHA, passed, N, _seed_of(seed),
                      time.time() - t0, cens,
                      {"chi2": rep.details, "marginal_z": marg_z, "observed": dict(emp.counts),
                       "inconclusive": cens >= 0.01, "table": emp.rows(ref)})


def check_parent_probability(d: IncrementDistribution, N: int, seed=0) -> TestReport:
    """``P[R(0) exists] = E[X_0] + 1`` for negative drift, and the same for the
    grandparent given the parent (a fresh walk from the record level)."""
    t0 = time.time()
    rng = _rng(seed)
    mean = d.mean
    if mean >= 0:
        raise ValueError("needs negative mean")
    m = mean + 1
    h = _certifying_margin(upward_ratio(d))
    _, _, _, out = _first_passage(d, N, rng, up=0, down=-h)
    has_parent = int((out == 1).sum())
    z1 = _z(has_parent, N, m)
    _, _, _, out2 = _first_passage(d, has_parent, rng, up=0, down=-h) if has_parent else (0, 0, 0, np.zeros(0))
    has_gp = int((out2 == 1).sum())
    z2 = _z(has_gp, has_parent, m) if has_parent else 0.0
    worst = max(abs(z1), abs(z2))
    return TestReport("parent-probability", worst, 3.0, worst < 3.0, N, _seed_of(seed),
                      time.time() - t0, 0.0,
                      {"m": m, "parent_freq": has_parent / N,
                       "grandparent_given_parent": has_gp / max(has_parent, 1), "z": [z1, z2]})


# ---------------------------------------------------------------------------
# Phases


def _zero_connected(d, W, N, rng, cap_factor) -> np.ndarray:
    """``{-W..0}`` joined inside ``[-W, cap_factor * W]`` for ``N`` walks.

    All chains from ``[-W, 0]`` meet at the first ``n >= 0`` with ``S_n`` at or
    above ``max S`` on ``[-W, 0]``, so it suffices to run the right half of the
    walk until it reaches that level.
    """
    left = d.sample(rng, (N, W))
    # S_{-m} = -(x_{-1} + .. + x_{-m}); S_0 = 0
    top = np.maximum(0, (-np.cumsum(left, axis=1)).max(axis=1))
    out = np.ones(N, dtype=bool)
    need = np.flatnonzero(top > 0)
    if need.size:
        _, _, _, res = _first_passage(d, need.size, rng, up=top[need], cap=cap_factor * W)
        out[need] = res == 1
    return out


def _negative_finite(d, W, rng, margin) -> bool:
    """Component of 0 certified finite in ``[-W, W]``: top self-loop and finite ``L``."""
    w = sample_window(d, -W, W, rng, right_margin=margin)
    cur = 0
    while True:
        r = record_map(w, cur)
        if r.censored:
            return False
        if r.value == cur:
            break
        cur = r.value
    lv = L_of(w, cur)
    return not lv.censored and lv.value != -math.inf and lv.value >= w.lo


def _positive_path(d, W, rng, margin, k_min) -> bool:
    """A certified path vertex in ``[-W, 0]`` with ``k_min`` resolved ancestors."""
    w = sample_window(d, -W, W, rng, left_margin=margin)
    vals, ok = all_types(w)
    cand = np.flatnonzero(ok[:W + 1] & (vals[:W + 1] >= 0))
    if cand.size == 0:
        return False
    chain = record_iterate(w, int(cand[-1]) + w.lo, k_min)
    return not chain.censored


def check_phase(d: IncrementDistribution, window: int, N: int, seed=0, *,
                windows: Optional[list] = None, k_min: int = 8,
                cap_factor: int = 1024) -> TestReport:
    """Evidence fraction for the phase of the record graph, with a trend over
    growing windows.

    * negative mean: component of 0 certified finite in ``[-W, W]``;
    * zero mean: ``{-W..0}`` connected in ``[-W, cap_factor * W]``;
    * positive mean: a certified path vertex in ``[-W, 0]`` with at least
      ``k_min`` resolved ancestors.
    """
    t0 = time.time()
    rng = _rng(seed)
    mean = d.mean
    sign = (mean > 1e-12) - (mean < -1e-12)
    sizes = windows or [max(window // 4, 8), max(window // 2, 16), window]
    fractions = {}
    for W in sizes:
        if sign == 0:
            good = int(_zero_connected(d, W, N, rng, cap_factor).sum())
        elif sign < 0:
            margin = _certifying_margin(upward_ratio(d), 1e-6)
            good = sum(_negative_finite(d, W, rng, margin) for _ in range(N))
        else:
            margin = _certifying_margin(hitting_prob_c(d), 1e-6)
            good = sum(_positive_path(d, W, rng, margin, k_min) for _ in range(N))
        fractions[W] = good / N
    thr = {-1: 0.99, 0: 0.95, 1: 0.99}[sign]
    final = fractions[sizes[-1]]
    slack = 3 * math.sqrt(0.25 / N)
    trend = all(fractions[b] >= fractions[a] - slack for a, b in zip(sizes, sizes[1:]))
    return TestReport(f"phase[{['negative', 'zero', 'positive'][sign + 1]}]", final, thr,
                      final > thr and trend, N * len(sizes), _seed_of(seed), time.time() - t0,
                      details={"fractions": fractions, "trend": trend})


# ---------------------------------------------------------------------------
# Radon-Nikodym derivative of the n-step re-rooted law


def _descendants_at_depth(w: Window, v: int, n: int) -> int:
    frontier = [v]
    for _ in range(n):
        nxt = []
        for u in frontier:
            ch = children_positions(w, u)
            if ch.censored:
                raise CensoredError(u)
            nxt.extend(ch.value)
        frontier = nxt
        if not frontier:
            break
    return len(frontier)


# Radius-1 patterns (x_{-1}, x_0, x_1) of a +-1 walk with x_{-1} = +1; with
# x_{-1} = -1 the vertex 0 has no children and both sides vanish.
DN_PATTERNS = [(1, a, b) for a in (-1, 1) for b in (-1, 1)]


def check_dn_radon_nikodym(d: IncrementDistribution, n_values: Iterable[int], r: int, N: int,
                           seed=0, patterns: Optional[list] = None, max_len: int = 1 << 18,
                           z_threshold: Optional[float] = None) -> TestReport:
    """``E[h(theta_{R^n})] = E[h d_n(0)]`` for indicators ``h`` of the marks
    ``(x_{-r}, .., x_r)`` around the root; one z-test per (n, pattern), by
    default at a Bonferroni-corrected threshold."""
    t0 = time.time()
    rng = _rng(seed)
    n_values = list(n_values)
    support = [int(k) for k in d.support]
    if patterns is None:
        patterns = [tuple(p) for p in itertools.product(support, repeat=2 * r + 1)]
    n_max = max(n_values)
    lhs = {(n, p): [] for n in n_values for p in patterns}
    censored = 0

    def observe(w: Window):
        out = {}
        for n in n_values:
            k = record_iterate(w, 0, n)
            if k.censored:
                raise CensoredError(0)
            k = k.value
            if k + r + 1 > w.hi or k - r < w.lo:
                raise CensoredError(k)
            around_k = tuple(int(v) for v in w.marks[k - r - w.lo:k + r + 1 - w.lo])
            dn = _descendants_at_depth(w, 0, n)
            out[n] = (around_k, dn)
        around_0 = tuple(int(v) for v in w.marks[-r - w.lo:r + 1 - w.lo])
        return around_0, out

    dn_mean = {n: 0.0 for n in n_values}
    for _ in range(N):
        res, _ = escalate(d, rng, observe, -16 * (n_max + r), 16 * (n_max + r), max_len)
        if res is None:
            censored += 1
            continue
        around_0, out = res
        for n in n_values:
            around_k, dn = out[n]
            dn_mean[n] += dn
            for p in patterns:
                lhs[(n, p)].append(float(around_k == p) - float(around_0 == p) * dn)
    used = N - censored
    zs = {}
    for key, diffs in lhs.items():
        a = np.asarray(diffs)
        sd = a.std(ddof=1) if len(a) > 1 else 0.0
        zs[key] = 0.0 if sd == 0 else float(a.mean() / (sd / math.sqrt(len(a))))
    m = len(zs)
    zcrit = z_threshold or float(stats.norm.isf(ALPHA / (2 * m)))
    worst = max(abs(z) for z in zs.values())
    cens = censored / N
    return TestReport("dn-radon-nikodym", worst, zcrit, worst < zcrit and cens < 0.01, N,
                      _seed_of(seed), time.time() - t0, cens,
                      {"z": {f"n={k[0]} pattern={k[1]}": v for k, v in zs.items()},
                       "mean_dn": {n: v / max(used, 1) for n, v in dn_mean.items()},
                       "inconclusive": cens >= 0.01})


# ---------------------------------------------------------------------------
# F-probability limits


def check_fprob_limit(source: Callable[[np.random.Generator], tuple], target: Callable[[np.random.Generator], tuple],
                      r: int, n: int, N: int, seed=0, *, threshold: float = 0.02,
                      key: Optional[Callable] = None, name: str = "fprob-limit") -> TestReport:
    """Radius-``r`` key law of ``source`` re-rooted at ``F^n(root)`` against the
    key law of ``target`` at its root.  Samplers return ``(tree, root)``.

    A sampler hitting its height cap means ``n + r`` exceeds the truncation and
    is a configuration error.
    """
    t0 = time.time()
    rng = _rng(seed)
    key = key or (lambda t, o: ball_key(t, o, r))
    src, tgt = EmpiricalDistribution(name), EmpiricalDistribution(name)
    overflow = 0
    for emp, sampler, shift in ((src, source, n), (tgt, target, 0)):
        k = 0
        while k < N:
            try:
                t, o = sampler(rng)
                for _ in range(shift):
                    o = parent_shift(t, o)
                emp.add(key(t, o))
                k += 1
            except TreeOverflow:
                overflow += 1
            except CensoredError as exc:
                raise ValueError("truncation too shallow for n + r") from exc
    tv = tv_distance(src, tgt)
    return TestReport(name, tv, threshold, tv < threshold, N, _seed_of(seed), time.time() - t0,
                      details={"source_keys": len(src), "target_keys": len(tgt), "overflow": overflow,
                               "table": paired_rows(src, tgt)})


# ---------------------------------------------------------------------------
# R-orthogonal shift


def check_rperp_preservation(d: IncrementDistribution, r: int, N: int, seed=0, *,
                             threshold: float = 0.02, max_len: int = 1 << 21) -> TestReport:
    """Law of ``(x_{k+m})_{|m| <= r}`` at ``k = R_perp(0)`` against the i.i.d. law."""
    t0 = time.time()
    rng = _rng(seed)
    support = [int(k) for k in d.support]
    ref = {}
    for pat in itertools.product(support, repeat=2 * r + 1):
        ref[pat] = float(np.prod([float(d[k]) for k in pat]))

    def observe(w: Window):
        k = r_perp_at(w, 0)
        if k.censored or k.value is None:
            raise CensoredError(0)
        k = k.value
        if k + r + 1 > w.hi or k - r < w.lo:
            raise CensoredError(k)
        return tuple(int(v) for v in w.marks[k - r - w.lo:k + r + 1 - w.lo])

    emp = EmpiricalDistribution("rperp-marks")
    censored = 0
    for _ in range(N):
        pat, _ = escalate(d, rng, observe, -r - 1, 64, max_len, grow_left=False)
        if pat is None:
            censored += 1
        else:
            emp.add(pat)
    tv = tv_distance(emp, ref)
    cens = censored / N
    return TestReport("rperp-preservation", tv, threshold, tv < threshold and cens < 0.01, N,
                      _seed_of(seed), time.time() - t0, cens,
                      {"keys": len(emp), "table": emp.rows(ref)})


# ---------------------------------------------------------------------------
# Record representation of other vertex-shifts


def _represent_once(d, shift, r, k_shift, rng, margin, max_len):
    """``(source key, rebuilt key, d_1 - 1 at u_0, d_1 - 1 at u_k)`` or None."""
    def observe(w: Window):
        if shift == "strict":
            view = GraphTreeView(build_record_graph(w, strict=True), 0)
        else:
            view = ShiftTreeView(w, 0, shift=shift, margin=margin)
        src = ball_key(view, 0, r)
        line = succession_line(view, 0, max_steps=k_shift, max_back=0)
        if len(line.forward) < k_shift:
            raise CensoredError(0)
        marks = (len(view.children(0)) - 1, len(view.children(line.at(k_shift))) - 1)
        # vertices are positions and the line follows them, so the ball's
        # extent is a good first guess for the span
        _, dist, _ = ball(view, 0, r)
        span = max(int(u) for u in dist) + 2
        back = 2 * max(-int(u) for u in dist) + 4 * (r + 1)
        while True:
            y = backward_phi(view, 0, span, back)
            try:
                rebuilt = ball_key(ShiftTreeView(y, 0), 0, r)
                return src, rebuilt, marks[0], marks[1]
            except CensoredError:
                if y.lo > -back or y.hi < span:
                    raise
                span, back = 2 * span, 2 * back

    return escalate(d, rng, observe, -64, 64, max_len)[0]


def check_record_representation(shift: str, d: IncrementDistribution, r: int, N: int, seed=0, *,
                                margin: int = 30, k_shift: int = 3, threshold: float = 0.03,
                                max_len: int = 1 << 21) -> TestReport:
    """Backward-map the ``shift``-graph component of 0 to a sequence ``Y`` and
    rebuild its record graph.

    The statistic is the TV distance between the radius-``r`` ball laws of the
    source component and of the rebuilt record graph at 0, which also must
    agree sample by sample.  Stationarity of ``Y`` is checked on the law of
    ``y_{-1}`` against ``y_{k-1}``, read off the succession line.
    """
    t0 = time.time()
    rng = _rng(seed)
    shift = {"SR": "strict", "C": "climbing"}.get(shift, shift)
    if shift not in ("strict", "climbing"):
        raise ValueError("shift must be 'strict' (SR) or 'climbing' (C)")
    src = EmpiricalDistribution(f"{shift}-ball")
    rebuilt = EmpiricalDistribution(f"{shift}-ball")
    y0 = EmpiricalDistribution("mark")
    yk = EmpiricalDistribution("mark")
    mismatches = censored = 0
    for _ in range(N):
        res = _represent_once(d, shift, r, k_shift, rng, margin, max_len)
        if res is None:
            censored += 1
            continue
        a, b, m0, mk = res
        src.add(a)
        rebuilt.add(b)
        y0.add(m0)
        yk.add(mk)
        mismatches += a != b
    tv = tv_distance(src, rebuilt)
    tv_y = tv_distance(y0, yk)
    cens = censored / N
    passed = tv < threshold and tv_y < threshold and mismatches == 0 and cens < 0.01
    return TestReport(f"record-representation[{shift}]", tv, threshold, passed, N, _seed_of(seed),
                      time.time() - t0, cens,
                      {"mismatches": mismatches, "keys": len(src), "stationarity_tv": tv_y,
                       "table": paired_rows(src, rebuilt)})


# ---------------------------------------------------------------------------
# Joint mark law of the path root


def conditioned_root_marks(d: IncrementDistribution, N: int, rng: np.random.Generator,
                           length: int = 256) -> EmpiricalDistribution:
    """``(t(0), d_1(0) - 1)`` for i.i.d. walks conditioned on 0 lying on the
    bi-infinite path, by rejection on the left tail (certified by a margin)."""
    c = hitting_prob_c(d)
    margin = _certifying_margin(c)
    emp = EmpiricalDistribution("root-marks")
    while emp.total < N:
        batch = max(1024, 3 * (N - emp.total))
        xs = d.sample(rng, (batch, length))
        # left walk: S_{-m} = -(x_{-1} + .. + x_{-m}), column m-1 is x_{-m}
        s_left = -np.cumsum(xs, axis=1)
        top = s_left.max(axis=1)
        on_path = top <= 0
        certified = s_left[:, -1] <= top - margin
        use = on_path & certified
        t = -top[use]
        x1 = xs[use, 0]
        for tt, xx in zip(t.tolist(), x1.tolist()):
            emp.add((tt, xx - tt))
            if emp.total >= N:
                break
    return emp


def check_joint_mark_law(d: IncrementDistribution, N: int, seed=0, mekt_sampler=None) -> TestReport:
    """Chi-square of ``(t(o), bush offspring)`` against ``P[X_0 = n + k] c^k``,
    from conditioned walks and, if given, from an MEKT sampler."""
    t0 = time.time()
    rng = _rng(seed)
    ref = joint_mark_law(d)
    walk = conditioned_root_marks(d, N, rng)
    rep_w = chi_square_gof(walk, ref, name="joint-marks[walk]")
    reports = {"walk": rep_w.statistic}
    passed = rep_w.passed
    if mekt_sampler is not None:
        emp = EmpiricalDistribution("root-marks")
        for _ in range(N):
            t, o = mekt_sampler(rng)
            emp.add((t.mark(o), len(t.children(o)) - 1))
        rep_m = chi_square_gof(emp, ref, name="joint-marks[mekt]")
        reports["mekt"] = rep_m.statistic
        passed = passed and rep_m.passed
    worst = min(reports.values())
    return TestReport("joint-mark-law", worst, ALPHA, passed, N, _seed_of(seed), time.time() - t0,
                      details={"p_values": reports})


def offspring_identity_counts(w: Window) -> tuple[int, int, int]:
    """Compare ``d_1`` from the record graph with ``x_{i-1} + 1 - max(t(i), 0)``
    at every vertex whose type and child list resolve.  Returns
    ``(checked_type_minus1, checked_type_nonneg, violations)``."""
    g = build_record_graph(w)
    vals, ok = all_types(w)
    lengths = g.offspring
    use = ok & g.children_complete
    use[0] = False
    idx = np.flatnonzero(use)
    x_prev = w.marks[idx - 1]
    t = vals[idx]
    pred = x_prev + 1 - np.maximum(t, 0)
    bad = int((pred != lengths[idx]).sum())
    return int((t == -1).sum()), int((t >= 0).sum()), bad


def compare_key_laws(name: str, draw_a: Callable[[np.random.Generator], object],
                     draw_b: Callable[[np.random.Generator], object], N: int, seed=0, *,
                     threshold: float = 0.02, max_censored: float = 0.01) -> TestReport:
    """TV distance between two key laws, ``N`` draws per side.  A draw of None
    is a censored observation; it is counted and never compared."""
    t0 = time.time()
    rng = _rng(seed)
    emps, cens = [], []
    for draw in (draw_a, draw_b):
        emp = EmpiricalDistribution(name)
        c = 0
        for _ in range(N):
            k = draw(rng)
            if k is None:
                c += 1
            else:
                emp.add(k)
        emps.append(emp)
        cens.append(c / N)
    tv = tv_distance(emps[0], emps[1])
    worst = max(cens)
    return TestReport(name, tv, threshold, tv < threshold and worst < max_censored, N,
                      _seed_of(seed), time.time() - t0, worst,
                      {"keys": [len(e) for e in emps], "censored": cens,
                       "table": paired_rows(emps[0], emps[1])})


def record_ball_key_iid(d: IncrementDistribution, r: int, rng: np.random.Generator, *,
                        right_margin: Optional[int] = None, max_len: int = 1 << 18,
                        mode: str = "ordered"):
    """Radius-``r`` key of the record graph of an i.i.d. walk at 0 (None if censored)."""
    def observe(w):
        return ball_key(ShiftTreeView(w, 0), 0, r, mode)
    return escalate(d, rng, observe, -32, 32, max_len, right_margin=right_margin)[0]


def record_ball_key_positive(d: IncrementDistribution, r: int, rng: np.random.Generator,
                             span: int = 256, mode: str = "ordered"):
    """Radius-``r`` typed key at 0 of the record graph of a positive-mean
    construction window (None if the ball leaves the window)."""
    w = construction_positive_mean(d, span, rng)
    try:
        return ball_key(ShiftTreeView(w, 0, with_types=True), 0, r, mode)
    except CensoredError:
        return None


def tree_ball_key(sampler: Callable[[np.random.Generator], object], r: int,
                  mode: str = "ordered") -> Callable[[np.random.Generator], object]:
    """Draw function: radius-``r`` key at the root of a sampled tree.  Trees
    that overflow their budget are redrawn (counted by the sampler budget)."""
    def draw(rng):
        while True:
            try:
                t = sampler(rng)
                return ball_key(t, t.root, r, mode)
            except TreeOverflow:
                continue
            except CensoredError:
                return None
    return draw


def negative_marks(w: Window, r: int) -> tuple:
    """``(x_{-r}, .., x_{-1})`` of a window."""
    if w.lo > -r:
        raise CensoredError(w.lo)
    return tuple(int(v) for v in w.marks[-r - w.lo:-w.lo])
