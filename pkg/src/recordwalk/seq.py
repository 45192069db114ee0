"""Increment laws, marked windows of the integer line, and the analytic helpers.

A window stores the marks ``x_lo .. x_{hi-1}`` where ``x_n`` is the mark of the
edge ``(n, n+1)``.  Prefix sums are normalised so that ``S_0 = 0``; the partial
sum ``y(n, j) = x_n + ... + x_{j-1}`` is then ``S_j - S_n``.
"""
from __future__ import annotations

import bisect
import functools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Generic, Iterable, Mapping, Optional, TypeVar, Union

import numpy as np
from scipy import optimize

T = TypeVar("T")

SKIP_FREE_LEFT = "skip_free_left"
GENERAL_INTEGER = "general_integer"

_SUM_TOL = 1e-12


# ---------------------------------------------------------------------------
# Three-valued results


@dataclass(frozen=True)
class Value(Generic[T]):
    """A quantity that is certain from in-window data."""

    value: T

    @property
    def censored(self) -> bool:
        return False


@dataclass(frozen=True)
class Censored:
    """A quantity that depends on data outside the window.

    ``hint`` optionally carries partial in-window information (for example the
    running minimum seen so far).
    """

    hint: object = None

    @property
    def censored(self) -> bool:
        return True


Resolved = Union[Value, Censored]
CENSORED = Censored()


class CensoredError(LookupError):
    """Raised by tree views when a requested quantity is censored."""


def unwrap(r: Resolved):
    """Return the value of ``r`` or raise :class:`CensoredError`."""
    if isinstance(r, Value):
        return r.value
    raise CensoredError(r.hint)


# ---------------------------------------------------------------------------
# Discrete laws


def _as_number(p):
    if isinstance(p, (Fraction, int)):
        return Fraction(p)
    return float(p)


class DiscreteLaw:
    """A finitely supported law on the integers.

    Probabilities may be floats or :class:`fractions.Fraction`; exact values are
    kept in ``mass`` while numerical work uses the float array ``probs``.
    """

    min_value = -math.inf

    def __init__(self, mass: Mapping[int, object], *, tol: float = _SUM_TOL):
        cleaned = {}
        for k, p in mass.items():
            k = int(k)
            p = _as_number(p)
            if p < 0:
                raise ValueError(f"negative probability {p} at {k}")
            if p == 0:
                continue
            if k < self.min_value:
                raise ValueError(f"support point {k} below {self.min_value}")
            cleaned[k] = cleaned.get(k, 0) + p
        if not cleaned:
            raise ValueError("empty law")
        total = float(sum(cleaned.values()))
        if abs(total - 1.0) > tol:
            raise ValueError(f"probabilities sum to {total}, not 1")
        self.mass = dict(sorted(cleaned.items()))
        self.support = np.fromiter(self.mass.keys(), dtype=np.int64)
        self.probs = np.array([float(p) for p in self.mass.values()])
        self._cum = np.cumsum(self.probs)
        self._cum[-1] = 1.0
        self._cum_list = self._cum.tolist()
        self._support_list = self.support.tolist()

    @classmethod
    def normalised(cls, mass: Mapping[int, float], *, tol: float = 1e-9):
        """Build a law from nearly normalised float masses (derived laws)."""
        total = sum(float(p) for p in mass.values())
        if abs(total - 1.0) > tol:
            raise ValueError(f"derived masses sum to {total}")
        return cls({k: float(p) / total for k, p in mass.items()})

    def __getitem__(self, k: int) -> float:
        return float(self.mass.get(int(k), 0.0))

    def __eq__(self, other) -> bool:
        return type(self) is type(other) and self.mass == other.mass

    def __hash__(self) -> int:
        return hash((type(self).__name__, tuple(self.mass.items())))

    def __repr__(self) -> str:
        body = ", ".join(f"{k}: {float(p):.6g}" for k, p in self.mass.items())
        return f"{type(self).__name__}({{{body}}})"

    @property
    def mean(self) -> float:
        return float(np.dot(self.support, self.probs))

    @property
    def variance(self) -> float:
        m = self.mean
        return float(np.dot((self.support - m) ** 2, self.probs))

    @property
    def max_value(self) -> int:
        return int(self.support[-1])

    def draw(self, rng: np.random.Generator) -> int:
        """One sample, cheap enough for per-vertex use in tree samplers."""
        if len(self._support_list) == 1:
            return self._support_list[0]
        i = bisect.bisect_right(self._cum_list, rng.random())
        return self._support_list[min(i, len(self._support_list) - 1)]

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        u = rng.random(size)
        idx = np.searchsorted(self._cum, u, side="right")
        np.minimum(idx, len(self.support) - 1, out=idx)
        return self.support[idx]

    def items(self):
        return ((k, float(p)) for k, p in self.mass.items())

    def to_json(self) -> dict:
        return {"support": [{"k": int(k), "p": float(p)} for k, p in self.mass.items()]}


class IncrementDistribution(DiscreteLaw):
    """Law of one increment ``X_0``.

    ``kind`` is ``skip_free_left`` (mass on ``k >= -1`` with ``0 < P[-1] < 1``)
    or ``general_integer``.
    """

    def __init__(self, mass: Mapping[int, object], kind: str = SKIP_FREE_LEFT, *, tol: float = _SUM_TOL):
        if kind not in (SKIP_FREE_LEFT, GENERAL_INTEGER):
            raise ValueError(f"unknown kind {kind!r}")
        self.kind = kind
        self.min_value = -1 if kind == SKIP_FREE_LEFT else -math.inf
        super().__init__(mass, tol=tol)
        if kind == SKIP_FREE_LEFT:
            p_down = self[-1]
            if not 0.0 < p_down < 1.0:
                raise ValueError("skip-free law needs 0 < P[X=-1] < 1")

    @classmethod
    def normalised(cls, mass, *, tol: float = 1e-9, kind: str = SKIP_FREE_LEFT):
        total = sum(float(p) for p in mass.values())
        if abs(total - 1.0) > tol:
            raise ValueError(f"derived masses sum to {total}")
        return cls({k: float(p) / total for k, p in mass.items()}, kind)

    @property
    def skip_free(self) -> bool:
        return self.kind == SKIP_FREE_LEFT

    def to_json(self) -> dict:
        out = super().to_json()
        out["kind"] = self.kind
        return out

    @classmethod
    def from_json(cls, obj: Mapping) -> "IncrementDistribution":
        mass = {int(e["k"]): e["p"] for e in obj["support"]}
        return cls(mass, obj.get("kind", SKIP_FREE_LEFT))


class OffspringLaw(DiscreteLaw):
    """Offspring law ``pi`` on ``{0, 1, 2, ...}``."""

    min_value = 0

    @classmethod
    def from_json(cls, obj: Mapping) -> "OffspringLaw":
        return cls({int(e["k"]): e["p"] for e in obj["support"]})


def two_point(p_down, p_up, up: int = 1) -> IncrementDistribution:
    """``P[X=-1] = p_down`` and ``P[X=up] = p_up``."""
    return IncrementDistribution({-1: p_down, up: p_up})


def parse_pairs(text: str) -> dict:
    """Parse ``"k:p,k:p"`` into a mass dictionary."""
    mass = {}
    for item in text.split(","):
        k, p = item.split(":")
        mass[int(k)] = Fraction(p) if "/" in p else float(p)
    return mass


def parse_distribution(text: str) -> IncrementDistribution:
    """Parse ``two_point:q,p`` or ``k:p,k:p,...``."""
    text = text.strip()
    if text.startswith("two_point:"):
        q, p = text.split(":", 1)[1].split(",")
        return two_point(float(q), float(p))
    if text.startswith("general:"):
        return IncrementDistribution(parse_pairs(text.split(":", 1)[1]), GENERAL_INTEGER)
    return IncrementDistribution(parse_pairs(text))


def parse_offspring(text: str) -> OffspringLaw:
    return OffspringLaw(parse_pairs(text))


@functools.lru_cache(maxsize=128)
def offspring_law(d: IncrementDistribution) -> OffspringLaw:
    """Law of ``X_0 + 1``."""
    return OffspringLaw({k + 1: p for k, p in d.mass.items()})


def increment_law(pi: OffspringLaw) -> IncrementDistribution:
    """Law of ``Z - 1`` for ``Z ~ pi``."""
    return IncrementDistribution({k - 1: p for k, p in pi.mass.items()})


# ---------------------------------------------------------------------------
# Analytic helpers


@functools.lru_cache(maxsize=128)
def hitting_prob_c(d: IncrementDistribution, tol: float = 1e-12, max_iter: int = 10_000) -> float:
    """Probability that the walk started at 0 ever visits -1.

    This is the smallest root in ``(0, 1]`` of ``sum_k p_k c^(k+1) = c``.  The
    monotone iteration ``c <- phi(c)`` from ``c = 0`` is run first; if it is
    too slow (near criticality) the remaining bracket is closed with Brent's
    method, which the monotone iterate keeps valid.
    """
    if not d.skip_free:
        raise ValueError("hitting probability needs a skip-free law")
    if d.mean <= 0:
        return 1.0
    ks = d.support.astype(float) + 1.0
    ps = d.probs

    def phi(c: float) -> float:
        return float(np.dot(ps, c ** ks))

    c = 0.0
    for _ in range(max_iter):
        nxt = phi(c)
        if abs(nxt - c) < tol * 1e-3:
            c = nxt
            break
        c = nxt
    else:
        # g(c) = phi(c) - c is convex with g(c_iter) > 0; find a point with g < 0.
        def dg(x):
            return float(np.dot(ps * ks, x ** (ks - 1.0))) - 1.0

        right = optimize.brentq(dg, c, 1.0, xtol=1e-15) if dg(c) < 0 < dg(1.0) else 1.0
        if phi(right) - right >= 0:
            raise ArithmeticError(f"hitting_prob_c: no sign change, residual {phi(c) - c:.3e}")
        c = optimize.brentq(lambda x: phi(x) - x, c, right, xtol=1e-16, rtol=1e-15)
    residual = abs(phi(c) - c)
    if residual > tol:
        raise ArithmeticError(f"hitting_prob_c did not converge, residual {residual:.3e}")
    return c


@functools.lru_cache(maxsize=128)
def upward_ratio(d: IncrementDistribution) -> float:
    """A ratio ``rho < 1`` with ``P[sup_n S_n >= h] <= rho^h`` for negative drift.

    Uses the Lundberg root ``E[rho^(-X)] = 1``; exact for unit up-jumps.
    """
    if d.mean >= 0:
        raise ValueError("upward_ratio needs negative mean")
    if d.max_value <= 0:
        return 0.0
    ks = d.support.astype(float)
    ps = d.probs

    def g(s):
        return float(np.dot(ps, s ** (-ks))) - 1.0

    # g(1) = 0 with g'(1) = -mean > 0, so g < 0 just below 1.
    hi = 1.0 - 1e-9
    while g(hi) >= 0:
        hi = 1.0 - (1.0 - hi) * 10
        if hi <= 0:
            raise ArithmeticError("upward_ratio bracket failed")
    return optimize.brentq(g, 1e-12, hi, xtol=1e-15)


@functools.lru_cache(maxsize=128)
def size_biased(pi: OffspringLaw) -> OffspringLaw:
    """``pi_hat(k) = k pi(k) / m(pi)``."""
    m = pi.mean
    if m <= 0:
        raise ValueError("size-biasing needs positive mean")
    return OffspringLaw.normalised({k: k * float(p) / m for k, p in pi.mass.items() if k > 0})


def _require_positive_mean(d: IncrementDistribution) -> None:
    if d.mean <= 0:
        raise ValueError("this law is defined only for positive mean")


@functools.lru_cache(maxsize=128)
def tilted_distribution(d: IncrementDistribution) -> IncrementDistribution:
    """``P[X_hat = k] = P[X_0 = k] c^k``; the tilted walk drifts down."""
    _require_positive_mean(d)
    c = hitting_prob_c(d)
    return IncrementDistribution.normalised({k: float(p) * c ** k for k, p in d.mass.items()})


@functools.lru_cache(maxsize=128)
def bar_tilde_pi(d: IncrementDistribution) -> tuple[OffspringLaw, OffspringLaw]:
    """Return ``(pi_bar, pi_tilde)``.

    ``pi_tilde(k) = c^(k-1) P[X_0 = k-1]`` is the child law off the path and
    ``pi_bar(k) = P[X_0 >= k] c^k`` the offspring law of a bush root.
    """
    _require_positive_mean(d)
    c = hitting_prob_c(d)
    tilde = {k + 1: float(p) * c ** k for k, p in d.mass.items()}
    bar = {}
    for k in range(0, d.max_value + 1):
        tail = float(d.probs[d.support >= k].sum())
        bar[k] = tail * c ** k
    return OffspringLaw.normalised(bar), OffspringLaw.normalised(tilde)


def joint_mark_law(d: IncrementDistribution) -> dict[tuple[int, int], float]:
    """``P[mark = n, bush offspring = k] = P[X_0 = n + k] c^k`` for ``n, k >= 0``."""
    return dict(_joint_mark_law(d))


@functools.lru_cache(maxsize=128)
def _joint_mark_law(d: IncrementDistribution) -> dict[tuple[int, int], float]:
    _require_positive_mean(d)
    c = hitting_prob_c(d)
    out = {}
    for s, p in d.mass.items():
        for k in range(0, s + 1):
            out[(s - k, k)] = float(p) * c ** k
    return out


# ---------------------------------------------------------------------------
# Windows


@dataclass(frozen=True, eq=False)
class Window:
    """Marks ``x_lo .. x_{hi-1}`` of a finite piece of the marked line.

    ``left_sup`` is an optional certificate: ``S_m - S_lo <= left_sup`` for every
    ``m < lo`` (constructions stopped at a block boundary provide 0).
    ``left_margin`` / ``right_margin`` opt into probabilistic certification of
    the unseen tails: a level at least that far above the boundary sum is
    treated as never reached.  The error is at most ``c^h`` on the left for
    positive drift and ``rho^h`` on the right for negative drift.
    """

    lo: int
    marks: np.ndarray
    left_sup: Optional[int] = None
    left_margin: Optional[int] = None
    right_margin: Optional[int] = None
    tags: Optional[np.ndarray] = None
    skip_free: bool = True
    sums: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        marks = np.asarray(self.marks, dtype=np.int64)
        if marks.ndim != 1:
            raise ValueError("marks must be one-dimensional")
        marks = marks.copy()
        marks.flags.writeable = False
        object.__setattr__(self, "marks", marks)
        hi = self.lo + len(marks)
        if not self.lo <= 0 <= hi:
            raise ValueError(f"window [{self.lo}, {hi}] must contain 0")
        if self.skip_free and len(marks) and marks.min() < -1:
            raise ValueError("skip-free window has a mark below -1")
        for m in (self.left_margin, self.right_margin):
            if m is not None and m < 0:
                raise ValueError("margins must be non-negative")
        sums = np.zeros(len(marks) + 1, dtype=np.int64)
        np.cumsum(marks, out=sums[1:])
        sums -= sums[-self.lo]
        sums.flags.writeable = False
        object.__setattr__(self, "sums", sums)

    @property
    def hi(self) -> int:
        return self.lo + len(self.marks)

    def __len__(self) -> int:
        return len(self.marks)

    def contains(self, n: int) -> bool:
        return self.lo <= n <= self.hi

    def S(self, n: int) -> int:
        """Prefix sum ``S_n`` with ``S_0 = 0``."""
        if not self.lo <= n <= self.hi:
            raise IndexError(f"vertex {n} outside [{self.lo}, {self.hi}]")
        return int(self.sums[n - self.lo])

    def x(self, n: int) -> int:
        """Mark of the edge ``(n, n+1)``."""
        if not self.lo <= n < self.hi:
            raise IndexError(f"edge {n} outside [{self.lo}, {self.hi})")
        return int(self.marks[n - self.lo])

    def y(self, n: int, j: int) -> int:
        return partial_sum(self, n, j)

    def left_bounded_by(self, level: int) -> bool:
        """True when it is certified that ``S_m <= level`` for every ``m < lo``."""
        s_lo = int(self.sums[0])
        if self.left_sup is not None and s_lo + self.left_sup <= level:
            return True
        return self.left_margin is not None and level - s_lo >= self.left_margin

    def right_below(self, level: int) -> bool:
        """True when it is certified that ``S_n < level`` for every ``n > hi``."""
        return self.right_margin is not None and level - int(self.sums[-1]) >= self.right_margin

    def with_certificates(self, *, left_sup=None, left_margin=None, right_margin=None) -> "Window":
        return Window(self.lo, self.marks, left_sup, left_margin, right_margin, self.tags,
                      self.skip_free)

    def to_json(self) -> dict:
        out = {"lo": int(self.lo), "marks": [int(v) for v in self.marks]}
        if self.left_sup is not None:
            out["left_sup"] = int(self.left_sup)
        for key in ("left_margin", "right_margin"):
            if getattr(self, key) is not None:
                out[key] = int(getattr(self, key))
        if not self.skip_free:
            out["skip_free"] = False
        return out

    @classmethod
    def from_json(cls, obj: Mapping) -> "Window":
        return cls(int(obj["lo"]), np.asarray(obj["marks"], dtype=np.int64),
                   obj.get("left_sup"), obj.get("left_margin"), obj.get("right_margin"),
                   skip_free=obj.get("skip_free", True))


def partial_sum(w: Window, n: int, j: int) -> int:
    """``y(n, j) = x_n + ... + x_{j-1}``, zero when ``n == j``."""
    if not w.lo <= n <= j <= w.hi:
        raise IndexError(f"need lo <= n <= j <= hi, got n={n}, j={j} in [{w.lo}, {w.hi}]")
    return int(w.sums[j - w.lo] - w.sums[n - w.lo])


def sample_window(d: IncrementDistribution, lo: int, hi: int, rng: np.random.Generator,
                  left_margin: Optional[int] = None, right_margin: Optional[int] = None) -> Window:
    """i.i.d. marks from ``d`` on the edges ``lo .. hi-1``."""
    if not lo <= 0 <= hi:
        raise ValueError("need lo <= 0 <= hi")
    return Window(lo, d.sample(rng, hi - lo), left_margin=left_margin, right_margin=right_margin,
                  skip_free=d.skip_free)


def extend_window(w: Window, d: IncrementDistribution, rng: np.random.Generator,
                  left: int = 0, right: int = 0) -> Window:
    """Append fresh i.i.d. marks on either side.  Drops a left certificate."""
    parts = []
    if left:
        parts.append(d.sample(rng, left))
    parts.append(np.asarray(w.marks))
    if right:
        parts.append(d.sample(rng, right))
    return Window(w.lo - left, np.concatenate(parts), None if left else w.left_sup,
                  w.left_margin, w.right_margin, None, w.skip_free)


def window_from_marks(marks: Iterable[int], lo: int = 0, **kw) -> Window:
    return Window(lo, np.asarray(list(marks), dtype=np.int64), **kw)
