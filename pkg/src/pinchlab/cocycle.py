"""Circle-map cocycles over subshifts, their exponents and domination."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circle import CircleMap, holder_constant, map_distance
from .errors import DomainError
from .measures import sample_position
from .symbolic import MarkovMeasure, Sft, SymbolicPoint, Word, sample_base

_WINDOW_ENUM_CAP = 250_000
_PAIR_ENUM_CAP = 256

DEFAULT_EPS_LADDER = (1e-2, 1e-4, 1e-6, 1e-8)


def _window_of(x: SymbolicPoint, radius: int) -> Word:
    return x.window(radius)


class CocycleBase:
    """Skew product over a subshift acting on the circle fiberwise.

    A cocycle assigns to each point x a circle homeomorphism f_x that
    depends only on the coordinates of x within a fixed window radius.
    Subclasses provide window_map; everything else (orbit composition,
    enumeration, padding to a larger radius) is shared.
    """

    sft: Sft
    window_radius: int
    alpha: float
    beta: float

    def window_map(self, word: Word) -> CircleMap:
        """Fiber map attached to a window word of length 2*radius + 1.

        Longer odd-length words are accepted and trimmed to the central
        part, which is how a cocycle is padded to a larger radius.
        """
        raise NotImplementedError

    def _trim(self, word: Word) -> Word:
        width = 2 * self.window_radius + 1
        if len(word) == width:
            return word
        if len(word) < width or len(word) % 2 == 0:
            raise DomainError("window word must have odd length >= 2*radius + 1")
        excess = (len(word) - width) // 2
        return word[excess:len(word) - excess]

    def fiber_map(self, x: SymbolicPoint) -> CircleMap:
        if x.sft != self.sft:
            raise DomainError("point lives over a different subshift")
        return self.window_map(_window_of(x, self.window_radius))

    def orbit_maps(self, x: SymbolicPoint, steps: int):
        """Yields the fiber maps at x, shift(x), ..., shift^(steps-1)(x)."""
        y = x
        for _ in range(steps):
            yield self.fiber_map(y)
            y = y.shift(1)

    def windows(self):
        """All admissible window words, lexicographic."""
        return self.sft.admissible_words(2 * self.window_radius + 1)

    def window_count(self) -> int:
        return self.sft.count_words(2 * self.window_radius + 1)


class TableCocycle(CocycleBase):
    """Cocycle given by an explicit window -> circle map table."""

    def __init__(self, sft: Sft, window_radius: int, table: dict, alpha: float = 1.0, beta: float = 1.0):
        if window_radius < 0:
            raise DomainError("window radius must be nonnegative")
        if not 0.0 < beta <= 1.0 or alpha <= 0.0:
            raise DomainError("need alpha > 0 and beta in (0, 1]")
        width = 2 * window_radius + 1
        table = {tuple(int(s) for s in w): m for w, m in table.items()}
        for word in sft.admissible_words(width):
            if word not in table:
                raise DomainError(f"table is missing admissible window {word}")
        for word, m in table.items():
            if len(word) != width:
                raise DomainError(f"window {word} does not have length {width}")
            if not sft.is_word_admissible(word):
                raise DomainError(f"window {word} is not admissible")
            if not isinstance(m, CircleMap):
                raise DomainError("table values must be circle maps")
        self.sft = sft
        self.window_radius = window_radius
        self.alpha = float(alpha)
        self.beta = float(beta)
        self.table = table

    def window_map(self, word: Word) -> CircleMap:
        return self.table[self._trim(tuple(int(s) for s in word))]


def constant_cocycle(sft: Sft, f: CircleMap, alpha: float = 1.0, beta: float = 1.0) -> TableCocycle:
    """Radius-0 cocycle applying the same map over every symbol."""
    return TableCocycle(sft, 0, {(s,): f for s in range(sft.alphabet_size)}, alpha, beta)


def symbol_cocycle(sft: Sft, maps, alpha: float = 1.0, beta: float = 1.0) -> TableCocycle:
    """Radius-0 cocycle with one map per symbol, given as a sequence."""
    if len(maps) != sft.alphabet_size:
        raise DomainError("need exactly one map per symbol")
    return TableCocycle(sft, 0, {(s,): m for s, m in enumerate(maps)}, alpha, beta)


class InverseCocycle(CocycleBase):
    """Time-reversed cocycle, living over the transposed subshift.

    The fiber map over a point y is the inverse of the original map
    over the reversal of y, so that running this cocycle forward agrees
    with running the original one backward. Inverting twice gives back
    the original table on the original subshift.
    """

    def __init__(self, base: CocycleBase):
        self.base = base
        self.sft = base.sft.transposed()
        self.window_radius = base.window_radius
        self.alpha = base.alpha
        self.beta = base.beta

    def window_map(self, word: Word) -> CircleMap:
        trimmed = self._trim(tuple(int(s) for s in word))
        return self.base.window_map(trimmed[::-1]).invert()

    def fiber_map(self, x: SymbolicPoint) -> CircleMap:
        if x.sft != self.sft:
            raise DomainError("point lives over a different subshift")
        return self.base.fiber_map(x.reverse()).invert()

    def orbit_maps(self, x: SymbolicPoint, steps: int):
        y = x.reverse()
        for k in range(steps):
            yield self.base.fiber_map(y.shift(-k)).invert()


def inverse_cocycle(F: CocycleBase) -> CocycleBase:
    """Time reversal of a cocycle; applied twice it returns the original."""
    if isinstance(F, InverseCocycle):
        return F.base
    return InverseCocycle(F)


def fiber_compose(F: CocycleBase, x: SymbolicPoint, steps: int) -> CircleMap:
    """The composed fiber map along steps shifts starting at x.

    Nonnegative steps composes forward: f at shift^(n-1)x after ... after
    f at x. Negative steps gives the inverse of the forward composition
    started at shift^steps(x), i.e. the backward cocycle.
    """
    if steps < 0:
        return fiber_compose(F, x.shift(steps), -steps).invert()
    out = CircleMap([0.0], [0.0])
    for m in F.orbit_maps(x, steps):
        out = m.compose(out)
    return out


# -- domination ---------------------------------------------------------------


@dataclass(frozen=True)
class DominationReport:
    worst: float
    threshold: float
    dominated: bool
    window_count: int


def domination_check(F: CocycleBase, rho: float, threshold: float) -> DominationReport:
    """Worst fiber Hoelder constant against the base contraction rate.

    For every window map and its inverse the product of its Hoelder
    constant with rho^(-alpha*beta) must stay below the threshold for
    the fiber geometry to move strictly slower than the base.
    """
    if rho <= 1.0:
        raise DomainError("metric base must exceed 1")
    if threshold <= 0.0:
        raise DomainError("threshold must be positive")
    scale = rho ** (-F.alpha * F.beta)
    if isinstance(F, InverseCocycle):
        # the checked set {maps} U {inverses} is the same for both directions
        inner = domination_check(F.base, rho, threshold)
        return DominationReport(inner.worst, threshold, inner.dominated, inner.window_count)
    underlying = getattr(F, "domination_proxy", None)
    if underlying is not None:
        inner = domination_check(underlying, rho, threshold)
        return DominationReport(inner.worst, threshold, inner.dominated, inner.window_count)
    count = F.window_count()
    if count > _WINDOW_ENUM_CAP:
        raise DomainError(f"too many windows to enumerate ({count})")
    worst = 0.0
    for word in F.windows():
        m = F.window_map(word)
        c = max(holder_constant(m, F.beta), holder_constant(m.invert(), F.beta))
        worst = max(worst, c * scale)
    return DominationReport(worst, threshold, worst <= threshold, count)


# -- distance between cocycles ------------------------------------------------


def window_separation(a: Word, b: Word) -> int:
    """Position |n| of the first disagreement between two centered words."""
    if len(a) != len(b) or len(a) % 2 == 0:
        raise DomainError("need centered words of equal odd length")
    r = len(a) // 2
    for s in range(r + 1):
        if a[r + s] != b[r + s] or a[r - s] != b[r - s]:
            return s
    raise DomainError("words are identical")


def base_holder_constant(F: CocycleBase, rho: float, radius: int | None = None) -> float:
    """How fast the fiber map varies along the base, in metric units.

    Maximum over pairs of admissible windows of the symmetrized map
    distance divided by rho^(-s), with s the position of the first
    disagreement between the windows.
    """
    if rho <= 1.0:
        raise DomainError("metric base must exceed 1")
    radius = F.window_radius if radius is None else radius
    if radius < F.window_radius:
        raise DomainError("cannot shrink a cocycle's window radius")
    width = 2 * radius + 1
    count = F.sft.count_words(width)
    if count > _PAIR_ENUM_CAP:
        raise DomainError(f"too many windows for pair enumeration ({count})")
    words = list(F.sft.admissible_words(width))
    maps = [F.window_map(w) for w in words]
    best = 0.0
    for i in range(len(words)):
        for j in range(i + 1, len(words)):
            s = window_separation(words[i], words[j])
            d = map_distance(maps[i], maps[j], F.beta)[1]
            best = max(best, d * rho ** (F.alpha * s))
    return best


def cocycle_distance(F: CocycleBase, G: CocycleBase, rho: float) -> float:
    """Uniform fiber distance plus the gap of base regularity constants.

    Both cocycles are padded to the larger window radius; the first term
    is the sup over admissible windows of the symmetrized map distance,
    the second compares how sharply each cocycle varies along the base.
    """
    if F.sft != G.sft:
        raise DomainError("cocycles live over different subshifts")
    if (F.alpha, F.beta) != (G.alpha, G.beta):
        raise DomainError("cocycles use different regularity exponents")
    radius = max(F.window_radius, G.window_radius)
    width = 2 * radius + 1
    count = F.sft.count_words(width)
    if count > _PAIR_ENUM_CAP:
        raise DomainError(f"too many windows for pair enumeration ({count})")
    sup_term = 0.0
    for word in F.sft.admissible_words(width):
        d = map_distance(F.window_map(word), G.window_map(word), F.beta)[1]
        sup_term = max(sup_term, d)
    holder_gap = abs(base_holder_constant(F, rho, radius) - base_holder_constant(G, rho, radius))
    return sup_term + holder_gap


# -- contraction exponents ----------------------------------------------------

_SATURATION_LEVEL = 0.25


@dataclass(frozen=True)
class ExponentCurve:
    eps: float
    sign: int
    values: np.ndarray  # a_n = log(d_n / d_0) / n for n = 1..n_max
    saturated: bool

    def tail_max(self, n_max: int) -> float:
        lo = n_max // 2
        return float(np.max(self.values[lo - 1:]))


@dataclass(frozen=True)
class ExponentEstimate:
    value: float
    curves: tuple[ExponentCurve, ...]
    all_saturated: bool

    def __float__(self):
        return self.value


def _two_point_curve(F: CocycleBase, x: SymbolicPoint, p: float, eps: float, sign: int, n_max: int) -> ExponentCurve:
    # track the oriented arc between the pair instead of two positions:
    # the arc length through each step is computed segment-exactly, so
    # an isometric cocycle reports identically zero
    pos = float(np.mod(p if sign > 0 else p - eps, 1.0))
    gap = eps
    d0 = min(gap, 1.0 - gap)
    values = np.empty(n_max)
    saturated = False
    maps = F.orbit_maps(x, n_max)
    for n, m in enumerate(maps, start=1):
        gap = m.arc_image(pos, gap)
        pos = float(m(pos))
        if gap >= 1.0:
            gap = np.nextafter(1.0, 0.0)
            saturated = True
        d = min(gap, 1.0 - gap)
        if d > _SATURATION_LEVEL:
            saturated = True
        if d <= 0.0:
            d = 5e-324
        values[n - 1] = np.log(d / d0) / n
    return ExponentCurve(eps, sign, values, saturated)


def contraction_exponent(
    F: CocycleBase,
    x: SymbolicPoint,
    p: float,
    n_max: int,
    eps_ladder=DEFAULT_EPS_LADDER,
) -> ExponentEstimate:
    """Two-point contraction rate of the cocycle at (x, p).

    For each offset eps in the ladder and each side of p, the normalized
    log ratio a_n = log(d_n/d_0)/n of the pair distance is followed to
    n_max and the maximum over the tail n in [n_max/2, n_max] is taken
    as that curve's rate (a finite-n stand-in for the limsup). The
    reported value is the max over curves whose pair distance never
    saturated above 1/4; if every curve saturated the estimate is
    meaningless and all curves are used, with a flag raised.
    """
    if n_max < 50:
        raise DomainError("n_max must be at least 50")
    if not eps_ladder:
        raise DomainError("offset ladder must not be empty")
    for eps in eps_ladder:
        if not 0.0 < eps < 0.5:
            raise DomainError("offsets must lie in (0, 1/2)")
    curves = []
    for eps in eps_ladder:
        for sign in (1, -1):
            curves.append(_two_point_curve(F, x, float(p), float(eps), sign, n_max))
    usable = [c for c in curves if not c.saturated]
    all_saturated = not usable
    pool = curves if all_saturated else usable
    value = max(c.tail_max(n_max) for c in pool)
    return ExponentEstimate(value, tuple(curves), all_saturated)


@dataclass(frozen=True)
class MeasureExponent:
    mean: float
    stderr: float
    values: np.ndarray
    sample_count: int

    def __float__(self):
        return self.mean


def measure_exponent(
    F: CocycleBase,
    disintegration,
    mu: MarkovMeasure,
    n_samples: int,
    seed: int,
    n_max: int = 150,
    eps_ladder=DEFAULT_EPS_LADDER,
) -> MeasureExponent:
    """Average two-point contraction rate over base and fiber samples.

    Base points are drawn from the Markov measure, fiber points from the
    disintegration at each base point; every sample gets its own seed
    derived from (seed, index) so results do not depend on evaluation
    order. Returns the sample mean with its standard error.
    """
    if n_samples < 1:
        raise DomainError("need at least one sample")
    core = n_max + F.window_radius + 2
    values = np.empty(n_samples)
    for i in range(n_samples):
        x = sample_base(mu, core, seed=(seed, 2 * i))
        rng = np.random.default_rng((seed, 2 * i + 1))
        p = sample_position(disintegration.measure_at(x), rng)
        values[i] = contraction_exponent(F, x, p, n_max, eps_ladder).value
    mean = float(np.mean(values))
    stderr = 0.0 if n_samples == 1 else float(np.std(values, ddof=1) / np.sqrt(n_samples))
    return MeasureExponent(mean, stderr, values, n_samples)
