"""Subshifts of finite type with exact eventually-periodic points.

Points of the shift space are stored as (left period, core, right
period) triples together with the coordinate at which the core starts.
Every operation on them (shift, comparison, distance, window reads) is
exact integer bookkeeping, so orbits and metric estimates downstream
never accumulate symbolic error.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import lcm
from typing import Iterator, Mapping, Sequence

import numpy as np

from .errors import DomainError, NonConvergenceError

Word = tuple[int, ...]

_STATIONARY_TOL = 1e-13
_ROW_SUM_TOL = 1e-12


def _as_word(symbols) -> Word:
    if isinstance(symbols, str):
        return tuple(int(ch) for ch in symbols)
    return tuple(int(s) for s in symbols)


class Sft:
    """Two-sided subshift of finite type on symbols 0..k-1.

    The transition matrix is read as ``transitions[i][j] == True`` iff
    the word ``ij`` is allowed. Construction rejects dead symbols and
    graphs that are not strongly connected, so every symbol sits on a
    bi-infinite admissible sequence.
    """

    __slots__ = ("transitions", "alphabet_size", "_succ", "_pred", "_key", "_transposed")

    def __init__(self, transitions) -> None:
        A = np.asarray(transitions, dtype=bool)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
            raise DomainError("transition matrix must be square and non-empty")
        k = A.shape[0]
        self.transitions = A
        self.alphabet_size = k
        self._succ = tuple(tuple(int(j) for j in np.flatnonzero(A[i])) for i in range(k))
        self._pred = tuple(tuple(int(i) for i in np.flatnonzero(A[:, j])) for j in range(k))
        for i in range(k):
            if not self._succ[i]:
                raise DomainError(f"symbol {i} has no admissible successor")
            if not self._pred[i]:
                raise DomainError(f"symbol {i} has no admissible predecessor")
        if not (self._reachable(A) and self._reachable(A.T)):
            raise DomainError("transition graph is not strongly connected")
        self._key = (k, A.tobytes())
        self._transposed = None

    @staticmethod
    def _reachable(A: np.ndarray) -> bool:
        k = A.shape[0]
        seen = np.zeros(k, dtype=bool)
        stack = [0]
        seen[0] = True
        while stack:
            i = stack.pop()
            for j in np.flatnonzero(A[i]):
                if not seen[j]:
                    seen[j] = True
                    stack.append(int(j))
        return bool(seen.all())

    def transposed(self) -> "Sft":
        """The subshift running backwards: every edge reversed."""
        if self._transposed is None:
            self._transposed = Sft(self.transitions.T)
        return self._transposed

    @classmethod
    def full_shift(cls, k: int) -> "Sft":
        return cls(np.ones((k, k), dtype=bool))

    @classmethod
    def golden_mean(cls) -> "Sft":
        """Two symbols, the word 11 forbidden."""
        return cls([[True, True], [True, False]])

    def allows(self, i: int, j: int) -> bool:
        return bool(self.transitions[i, j])

    def successors(self, i: int) -> Word:
        return self._succ[i]

    def predecessors(self, j: int) -> Word:
        return self._pred[j]

    def check_symbols(self, word: Sequence[int]) -> None:
        for s in word:
            if not 0 <= s < self.alphabet_size:
                raise DomainError(f"symbol {s} outside alphabet of size {self.alphabet_size}")

    def is_word_admissible(self, word: Sequence[int], cyclic: bool = False) -> bool:
        w = _as_word(word)
        self.check_symbols(w)
        pairs = zip(w, w[1:])
        if not all(self.transitions[i, j] for i, j in pairs):
            return False
        if cyclic and w and not self.transitions[w[-1], w[0]]:
            return False
        return True

    def admissible_words(self, length: int) -> Iterator[Word]:
        """All admissible words of the given length, lexicographic."""
        if length < 0:
            raise DomainError("length must be non-negative")
        if length == 0:
            yield ()
            return
        word = []

        def rec(prefix_last: int | None):
            if len(word) == length:
                yield tuple(word)
                return
            options = range(self.alphabet_size) if prefix_last is None else self._succ[prefix_last]
            for s in options:
                word.append(s)
                yield from rec(s)
                word.pop()

        yield from rec(None)

    def count_words(self, length: int) -> int:
        if length == 0:
            return 1
        v = np.ones(self.alphabet_size, dtype=np.int64)
        M = self.transitions.astype(np.int64)
        for _ in range(length - 1):
            v = M @ v
        return int(v.sum())

    def shortest_cycle_through(self, i: int) -> Word:
        """Shortest admissible cycle starting and ending at symbol i.

        Deterministic: breadth first, smaller symbols explored first.
        Returned word starts with i and omits the closing repeat.
        """
        if self.transitions[i, i]:
            return (i,)
        parent: dict[int, int] = {}
        frontier = [i]
        seen = {i}
        while frontier:
            nxt = []
            for u in frontier:
                for v in self._succ[u]:
                    if v == i:
                        path = [u]
                        while path[-1] != i:
                            path.append(parent[path[-1]])
                        path.reverse()
                        return tuple(path)
                    if v not in seen:
                        seen.add(v)
                        parent[v] = u
                        nxt.append(v)
            frontier = nxt
        raise DomainError(f"no cycle through symbol {i}")  # unreachable: graph strongly connected

    def __eq__(self, other) -> bool:
        return isinstance(other, Sft) and self._key == other._key

    def __hash__(self) -> int:
        return hash(self._key)

    def __repr__(self) -> str:
        return f"Sft(k={self.alphabet_size})"


# ---------------------------------------------------------------------------
# eventually periodic points


def _primitive(word: Word) -> Word:
    n = len(word)
    for d in range(1, n + 1):
        if n % d == 0 and word == word[:d] * (n // d):
            return word[:d]
    return word


def _raw_symbol(lp: Word, core: Word, rp: Word, cs: int, n: int) -> int:
    j = n - cs
    if j < 0:
        return lp[j % len(lp)]
    if j < len(core):
        return core[j]
    return rp[(j - len(core)) % len(rp)]


def _canonicalize(lp: Word, core: Word, rp: Word, cs: int) -> tuple[Word, Word, Word, int]:
    """Unique normal form: primitive tails, maximal tail extent.

    The left tail is pushed as far right as it reproduces the sequence,
    the right tail as far left; a globally periodic sequence collapses
    to (w, (), w, 0) with w read off at coordinate 0.
    """
    lp = _primitive(lp)
    rp = _primitive(rp)
    buf = list(core)
    while buf and buf[-1] == rp[-1]:
        rp = (rp[-1],) + rp[:-1]
        buf.pop()
    while buf and buf[0] == lp[0]:
        lp = lp[1:] + (lp[0],)
        buf.pop(0)
        cs += 1
    if buf:
        return lp, tuple(buf), rp, cs
    q = lcm(len(lp), len(rp))
    if all(_raw_symbol(lp, (), rp, cs, cs - q + t) == _raw_symbol(lp, (), rp, cs, cs + t) for t in range(q)):
        w = _primitive(tuple(_raw_symbol(lp, (), rp, cs, t) for t in range(q)))
        return w, (), w, 0
    slides = 0
    while lp[-1] == rp[-1]:
        lp = (lp[-1],) + lp[:-1]
        rp = (rp[-1],) + rp[:-1]
        cs -= 1
        slides += 1
        if slides > q:
            raise AssertionError("slide loop on a non-periodic point")
    return lp, (), rp, cs


class SymbolicPoint:
    """A bi-infinite admissible sequence, periodic on both tails."""

    __slots__ = ("sft", "left_period", "core", "right_period", "core_start", "_hash")

    def __init__(self, sft: Sft, left_period, core, right_period, core_start: int = 0,
                 _skip: bool = False) -> None:
        self.sft = sft
        if _skip:
            self.left_period = left_period
            self.core = core
            self.right_period = right_period
            self.core_start = core_start
            self._hash = None
            return
        lp = _as_word(left_period)
        rp = _as_word(right_period)
        cw = _as_word(core)
        if not lp or not rp:
            raise DomainError("tail periods must be non-empty")
        sft.check_symbols(lp + cw + rp)
        self._validate_junctions(sft, lp, cw, rp)
        self.left_period, self.core, self.right_period, self.core_start = _canonicalize(
            lp, cw, rp, int(core_start))
        self._hash = None

    @staticmethod
    def _validate_junctions(sft: Sft, lp: Word, core: Word, rp: Word) -> None:
        A = sft.transitions
        def need(i, j, what):
            if not A[i, j]:
                raise DomainError(f"inadmissible junction {i}->{j} in {what}")
        for a, b in zip(lp, lp[1:]):
            need(a, b, "left period")
        need(lp[-1], lp[0], "left period (wrap)")
        for a, b in zip(rp, rp[1:]):
            need(a, b, "right period")
        need(rp[-1], rp[0], "right period (wrap)")
        for a, b in zip(core, core[1:]):
            need(a, b, "core")
        if core:
            need(lp[-1], core[0], "left tail to core")
            need(core[-1], rp[0], "core to right tail")
        else:
            need(lp[-1], rp[0], "left tail to right tail")

    # -- basic geometry ----------------------------------------------------

    @property
    def core_end(self) -> int:
        return self.core_start + len(self.core)

    @property
    def is_periodic(self) -> bool:
        return not self.core and self.left_period == self.right_period

    @property
    def period(self) -> int:
        if not self.is_periodic:
            raise DomainError("point is not periodic")
        return len(self.left_period)

    def symbol_at(self, n: int) -> int:
        return _raw_symbol(self.left_period, self.core, self.right_period, self.core_start, n)

    def symbols(self, lo: int, hi: int) -> Word:
        """Coordinates lo..hi-1 as a word."""
        return tuple(self.symbol_at(n) for n in range(lo, hi))

    def window(self, radius: int) -> Word:
        return self.symbols(-radius, radius + 1)

    def shift(self, k: int = 1) -> "SymbolicPoint":
        """sigma^k: coordinate n of the result is coordinate n+k of self."""
        out = SymbolicPoint(self.sft, None, None, None, 0, _skip=True)
        if self.is_periodic:
            r = k % len(self.left_period)
            w = self.left_period[r:] + self.left_period[:r]
            out.left_period = w
            out.core = ()
            out.right_period = w
            out.core_start = 0
            return out
        out.left_period = self.left_period
        out.core = self.core
        out.right_period = self.right_period
        out.core_start = self.core_start - k
        return out

    def reverse(self) -> "SymbolicPoint":
        """The sequence read backwards, over the transposed shift."""
        rev_sft = self.sft.transposed()
        lp = tuple(reversed(self.right_period))
        rp = tuple(reversed(self.left_period))
        cw = tuple(reversed(self.core))
        cs = 1 - self.core_end
        return SymbolicPoint(rev_sft, lp, cw, rp, cs)

    # -- comparison --------------------------------------------------------

    def _canonical_key(self):
        return (self.left_period, self.core, self.right_period, self.core_start)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SymbolicPoint):
            return NotImplemented
        return (self.sft.alphabet_size == other.sft.alphabet_size
                and self._canonical_key() == other._canonical_key())

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.sft.alphabet_size,) + self._canonical_key())
        return self._hash

    def __repr__(self) -> str:
        return f"SymbolicPoint({format_point(self)!r})"


def _tail_scan_bound(x: SymbolicPoint, y: SymbolicPoint) -> int:
    span = max(abs(x.core_start), abs(x.core_end), abs(y.core_start), abs(y.core_end))
    return span + lcm(len(x.left_period), len(y.left_period)) \
        + lcm(len(x.right_period), len(y.right_period)) + 1


def agrees_forward(x: SymbolicPoint, y: SymbolicPoint) -> bool:
    """Exact test that x_n == y_n for every n >= 0."""
    hi = max(x.core_end, y.core_end, 0) + lcm(len(x.right_period), len(y.right_period))
    return all(x.symbol_at(n) == y.symbol_at(n) for n in range(0, hi))


def agrees_backward(x: SymbolicPoint, y: SymbolicPoint) -> bool:
    """Exact test that x_n == y_n for every n <= 0."""
    lo = min(x.core_start, y.core_start, 0) - lcm(len(x.left_period), len(y.left_period))
    return all(x.symbol_at(n) == y.symbol_at(n) for n in range(lo, 1))


def agreement_radius(x: SymbolicPoint, y: SymbolicPoint) -> int | None:
    """Largest N with x_n == y_n for all |n| < N; None when x == y."""
    if x == y:
        return None
    bound = _tail_scan_bound(x, y)
    for m in range(bound + 1):
        if x.symbol_at(m) != y.symbol_at(m) or x.symbol_at(-m) != y.symbol_at(-m):
            return m
    raise AssertionError("distinct points agree on the full periodic window")


def shift_distance(x: SymbolicPoint, y: SymbolicPoint, rho: float) -> float:
    """d(x, y) = rho^(-N) with N the agreement radius; 0 for equal points."""
    if x.sft.alphabet_size != y.sft.alphabet_size:
        raise DomainError("points live over different alphabets")
    if not rho > 1:
        raise DomainError("metric base rho must exceed 1")
    n = agreement_radius(x, y)
    if n is None:
        return 0.0
    return float(rho) ** (-n)


# -- constructions --------------------------------------------------------


def periodic_point(sft: Sft, word) -> SymbolicPoint:
    w = _as_word(word)
    if not w:
        raise DomainError("periodic word must be non-empty")
    if not sft.is_word_admissible(w, cyclic=True):
        raise DomainError(f"word {w} is not an admissible cycle")
    return SymbolicPoint(sft, w, (), w, 0)


@dataclass(frozen=True)
class HomoclinicPoint:
    point: SymbolicPoint
    k_forward: int   # shift count landing the point in the forward-agreement set of the base
    k_backward: int  # backward shift count landing in the backward-agreement set


def homoclinic_point(x0: SymbolicPoint, bridge_out, bridge_in) -> HomoclinicPoint:
    """A point doubly asymptotic to the periodic orbit of x0.

    The bridge words are concatenated and planted at coordinate 0, with
    the periodic word of x0 filling both tails. k_forward clears the
    bridge (its length), k_backward is one full period of x0.
    """
    if not x0.is_periodic:
        raise DomainError("base point of a homoclinic construction must be periodic")
    sft = x0.sft
    core = _as_word(bridge_out) + _as_word(bridge_in)
    if not core:
        raise DomainError("bridge words must not both be empty")
    if core[0] == x0.symbol_at(0):
        raise DomainError("bridge must leave the cylinder of the base point at coordinate 0")
    w = x0.left_period
    z = SymbolicPoint(sft, w, core, w, 0)
    k1 = len(core)
    k2 = x0.period
    if not agrees_forward(z.shift(k1), x0):
        raise AssertionError("homoclinic forward landing failed")
    if not agrees_backward(z.shift(-k2), x0):
        raise AssertionError("homoclinic backward landing failed")
    return HomoclinicPoint(z, k1, k2)


def default_anchors(sft: Sft) -> dict[int, SymbolicPoint]:
    """One periodic point per symbol, starting at that symbol."""
    return {i: periodic_point(sft, sft.shortest_cycle_through(i))
            for i in range(sft.alphabet_size)}


def anchor_projection(x: SymbolicPoint, anchors: Mapping[int, SymbolicPoint]) -> SymbolicPoint:
    """Keep the future of x, replace the past by the anchor of x_0."""
    s = x.symbol_at(0)
    try:
        a = anchors[s]
    except KeyError:
        raise DomainError(f"no anchor for symbol {s}") from None
    if a.symbol_at(0) != s:
        raise DomainError(f"anchor for symbol {s} does not start with it")
    lo = min(a.core_start, 0)
    hi = max(x.core_end, 1)
    core = a.symbols(lo, 0) + x.symbols(0, hi)
    l = len(a.left_period)
    shift_l = (lo - a.core_start) % l
    lp = a.left_period[shift_l:] + a.left_period[:shift_l]
    r = len(x.right_period)
    shift_r = (hi - x.core_end) % r
    rp = x.right_period[shift_r:] + x.right_period[:shift_r]
    return SymbolicPoint(x.sft, lp, core, rp, lo)


# -- serialization ---------------------------------------------------------


def _word_str(w: Word) -> str:
    return "".join(str(s) for s in w)


def format_point(x: SymbolicPoint) -> str:
    """leftPeriod|core|rightPeriod@originOffset, words as digit strings."""
    if x.sft.alphabet_size > 10:
        raise DomainError("digit serialization requires an alphabet of at most 10 symbols")
    return (f"{_word_str(x.left_period)}|{_word_str(x.core)}|"
            f"{_word_str(x.right_period)}@{-x.core_start}")


def parse_point(sft: Sft, text: str) -> SymbolicPoint:
    try:
        body, off = text.rsplit("@", 1)
        lp, core, rp = body.split("|")
        offset = int(off)
    except ValueError as exc:
        raise DomainError(f"malformed point literal {text!r}") from exc
    return SymbolicPoint(sft, _as_word(lp), _as_word(core), _as_word(rp), -offset)


def point_through_word(sft: Sft, word, offset: int = 0) -> SymbolicPoint:
    """Some admissible point whose coordinates offset..offset+len-1 spell word.

    Both tails are closed off with shortest admissible cycles; useful for
    evaluating cylinder-local quantities at an explicit point.
    """
    w = _as_word(word)
    if not w:
        raise DomainError("word must be non-empty")
    if not sft.is_word_admissible(w):
        raise DomainError(f"word {w} is not admissible")
    left_cycle = sft.shortest_cycle_through(w[0])
    right_cycle = sft.shortest_cycle_through(w[-1])
    rp = right_cycle[1:] + right_cycle[:1]
    return SymbolicPoint(sft, left_cycle, w, rp, offset)


# ---------------------------------------------------------------------------
# Markov measures


class MarkovMeasure:
    """Shift-invariant Markov measure with an attached metric base.

    stochastic: row-stochastic transition matrix supported inside the
    SFT; stationary: its unique stationary row vector, found by power
    iteration on the lazy chain (P + I)/2 until the residual against P
    itself drops below 1e-13.
    """

    __slots__ = ("sft", "stochastic", "stationary", "metric_base")

    def __init__(self, sft: Sft, stochastic, metric_base: float) -> None:
        P = np.asarray(stochastic, dtype=float)
        k = sft.alphabet_size
        if P.shape != (k, k):
            raise DomainError(f"stochastic matrix must be {k}x{k}")
        if np.any(P < 0):
            raise DomainError("stochastic matrix has negative entries")
        rows = P.sum(axis=1)
        if np.any(np.abs(rows - 1.0) > _ROW_SUM_TOL):
            raise DomainError("rows of the stochastic matrix must sum to 1")
        if np.any((P > 0) & ~sft.transitions):
            raise DomainError("stochastic support leaves the admissible transitions")
        if not (Sft._reachable(P > 0) and Sft._reachable((P > 0).T)):
            raise DomainError("stochastic matrix is not irreducible")
        if not metric_base > 1:
            raise DomainError("metric base must exceed 1")
        self.sft = sft
        self.stochastic = P
        self.metric_base = float(metric_base)
        self.stationary = self._stationary(P)

    @staticmethod
    def _stationary(P: np.ndarray) -> np.ndarray:
        k = P.shape[0]
        pi = np.full(k, 1.0 / k)
        lazy = 0.5 * (P + np.eye(k))
        for _ in range(200_000):
            if np.abs(pi @ P - pi).sum() <= _STATIONARY_TOL:
                break
            pi = pi @ lazy
            pi /= pi.sum()
        else:
            raise NonConvergenceError("stationary vector did not converge")
        if np.any(pi <= 0):
            raise DomainError("stationary vector is not fully supported")
        return pi

    def reversed(self) -> "MarkovMeasure":
        """The same measure seen by the inverse shift (time reversal)."""
        P, pi = self.stochastic, self.stationary
        Q = (pi[:, None] * P / pi[None, :]).T
        Q /= Q.sum(axis=1, keepdims=True)
        return MarkovMeasure(self.sft.transposed(), Q, self.metric_base)

    def __repr__(self) -> str:
        return f"MarkovMeasure(k={self.sft.alphabet_size}, rho={self.metric_base})"


def markov_measure(sft: Sft, stochastic, rho: float) -> MarkovMeasure:
    return MarkovMeasure(sft, stochastic, rho)


def bernoulli_measure(sft: Sft, weights, rho: float) -> MarkovMeasure:
    p = np.asarray(weights, dtype=float)
    P = np.tile(p, (sft.alphabet_size, 1))
    return MarkovMeasure(sft, P, rho)


def cylinder_mass(mu: MarkovMeasure, word, offset: int = 0) -> float:
    """Measure of the cylinder spelling word from the given coordinate.

    Shift invariance makes the value independent of offset; inadmissible
    words get mass 0 rather than an error.
    """
    w = _as_word(word)
    if not w:
        raise DomainError("cylinder word must be non-empty")
    mu.sft.check_symbols(w)
    if not mu.sft.is_word_admissible(w):
        return 0.0
    mass = mu.stationary[w[0]]
    for a, b in zip(w, w[1:]):
        mass *= mu.stochastic[a, b]
    return float(mass)


def product_density(mu: MarkovMeasure, x: SymbolicPoint) -> float:
    """Density tying the measure to its past x future product structure.

    For a cylinder pinning coordinates -m..n (m >= 1) the exact identity
    mass(full word) = mass(past word) * mass(future word) * density(x)
    holds at every point x of the cylinder.
    """
    a, b = x.symbol_at(-1), x.symbol_at(0)
    return float(mu.stochastic[a, b] / mu.stationary[b])


def sample_base(mu: MarkovMeasure, core_length: int, seed) -> SymbolicPoint:
    """Draw the coordinates -core_length..core_length of a mu-random point.

    The two-sided window is exact Markov sampling (backward side through
    the reversed chain); outside it the point is closed off with shortest
    admissible cycles, which only matters to observables that read wider
    windows than requested. Any numpy seed material works, including
    (base, index) tuples for order-independent batch draws.
    """
    if core_length < 1:
        raise DomainError("core_length must be at least 1")
    rng = np.random.default_rng(seed)
    sft, P, pi = mu.sft, mu.stochastic, mu.stationary
    k = sft.alphabet_size
    back = (pi[:, None] * P / pi[None, :]).T  # back[j, i]: step from j to predecessor i
    mid = int(rng.choice(k, p=pi))
    fwd = [mid]
    for _ in range(core_length):
        fwd.append(int(rng.choice(k, p=P[fwd[-1]])))
    bwd = [mid]
    for _ in range(core_length):
        row = back[bwd[-1]]
        bwd.append(int(rng.choice(k, p=row / row.sum())))
    core = tuple(reversed(bwd[1:])) + tuple(fwd)
    left_cycle = sft.shortest_cycle_through(core[0])
    right_cycle = sft.shortest_cycle_through(core[-1])
    rp = right_cycle[1:] + right_cycle[:1]
    return SymbolicPoint(sft, left_cycle, core, rp, -core_length)
