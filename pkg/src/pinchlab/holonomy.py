"""Holonomy maps between fibers and the conjugation they induce."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .circle import CircleMap, identity_map, sup_distance
from .cocycle import CocycleBase
from .errors import DomainError, NonConvergenceError, PreconditionError
from .symbolic import (
    MarkovMeasure,
    SymbolicPoint,
    agrees_backward,
    agrees_forward,
    anchor_projection,
    default_anchors,
    sample_base,
    shift_distance,
)

_HOLONOMY_CAP = 1000


@dataclass(frozen=True)
class Holonomy:
    """Limit of the fiber graph transform between two base points."""

    map: CircleMap
    side: str
    source: SymbolicPoint
    target: SymbolicPoint
    truncation: int
    residual: float
    residual_history: tuple


def holonomy_map(
    F: CocycleBase,
    x: SymbolicPoint,
    y: SymbolicPoint,
    side: str = "stable",
    tol: float = 1e-10,
    cap: int = _HOLONOMY_CAP,
    dominated: bool | None = None,
) -> Holonomy:
    """Fiber identification along the local set joining x to y.

    On the stable side the iterates (f^n over y)^-1 after (f^n over x)
    are followed until two consecutive ones agree within tol; the
    unstable side runs the shift backwards instead. The pair must lie
    on the same local set: every coordinate n >= 0 equal for stable,
    every n <= 0 for unstable. A caller that knows the cocycle failed
    its domination check can pass dominated=False to get a warning
    while still attempting the limit.
    """
    if side not in ("stable", "unstable"):
        raise DomainError("side must be 'stable' or 'unstable'")
    if x.sft != F.sft or y.sft != F.sft:
        raise DomainError("points live over a different subshift")
    if tol <= 0.0:
        raise DomainError("tolerance must be positive")
    if cap < 1:
        raise DomainError("iteration cap must be at least 1")
    if side == "stable":
        if not agrees_forward(x, y):
            raise PreconditionError("points do not share their forward coordinates")
    else:
        if not agrees_backward(x, y):
            raise PreconditionError("points do not share their backward coordinates")
    if dominated is False:
        warnings.warn("cocycle is not dominated; holonomy may not converge", stacklevel=2)
    if x == y:
        return Holonomy(identity_map(), side, x, y, 0, 0.0, ())
    ident = identity_map()
    fwd_x, fwd_y = ident, ident
    h_prev = ident
    history = []
    for n in range(1, cap + 1):
        if side == "stable":
            fwd_x = F.fiber_map(x.shift(n - 1)).compose(fwd_x)
            fwd_y = F.fiber_map(y.shift(n - 1)).compose(fwd_y)
            h = fwd_y.invert().compose(fwd_x)
        else:
            fwd_x = fwd_x.compose(F.fiber_map(x.shift(-n)))
            fwd_y = fwd_y.compose(F.fiber_map(y.shift(-n)))
            h = fwd_y.compose(fwd_x.invert())
        res = sup_distance(h, h_prev)
        history.append(res)
        if res < tol:
            return Holonomy(h, side, x, y, n, res, tuple(history))
        h_prev = h
    raise NonConvergenceError(
        f"{side} holonomy residual still {history[-1]:.3e} after {cap} iterations "
        f"(last five: {[f'{r:.3e}' for r in history[-5:]]})"
    )


# -- local-set partners -------------------------------------------------------


def _cycle_closed_point(sft, symbols, start):
    left = sft.shortest_cycle_through(symbols[0])
    right = sft.shortest_cycle_through(symbols[-1])
    rp = right[1:] + right[:1]
    return SymbolicPoint(sft, left, tuple(symbols), rp, start)


def local_partner(
    mu: MarkovMeasure,
    x: SymbolicPoint,
    core_length: int,
    seed,
    side: str = "stable",
) -> SymbolicPoint:
    """A point on the local stable (or unstable) set of x.

    Keeps x's coordinates on the shared half line and resamples the
    other half from the Markov chain, so partner statistics match the
    measure conditioned on the shared coordinates.
    """
    if side not in ("stable", "unstable"):
        raise DomainError("side must be 'stable' or 'unstable'")
    if core_length < 1:
        raise DomainError("core_length must be at least 1")
    rng = np.random.default_rng(seed)
    P, pi = mu.stochastic, mu.stationary
    if side == "stable":
        kept = [x.symbol_at(j) for j in range(0, core_length + 1)]
        back = (pi[:, None] * P / pi[None, :]).T
        past = [kept[0]]
        for _ in range(core_length):
            row = back[past[-1]]
            past.append(int(rng.choice(mu.sft.alphabet_size, p=row / row.sum())))
        symbols = tuple(reversed(past[1:])) + tuple(kept)
        return _cycle_closed_point(mu.sft, symbols, -core_length)
    kept = [x.symbol_at(j) for j in range(-core_length, 1)]
    future = [kept[-1]]
    for _ in range(core_length):
        future.append(int(rng.choice(mu.sft.alphabet_size, p=P[future[-1]])))
    symbols = tuple(kept) + tuple(future[1:])
    return _cycle_closed_point(mu.sft, symbols, -core_length)


def truncate_tail(y: SymbolicPoint, depth: int, side: str = "stable") -> SymbolicPoint:
    """Replace y beyond the given depth by a cycle, keeping the rest.

    On the stable side coordinates >= -depth survive, on the unstable
    side coordinates <= depth; the result stays on the same local set
    as y but at base distance about rho^-depth from it.
    """
    if depth < 1:
        raise DomainError("depth must be at least 1")
    sft = y.sft
    if side == "stable":
        hi = max(y.core_end, -depth + 1)
        symbols = tuple(y.symbol_at(j) for j in range(-depth, hi))
        left = sft.shortest_cycle_through(symbols[0])
        r = (hi - y.core_end) % len(y.right_period)
        rp = y.right_period[r:] + y.right_period[:r]
        return SymbolicPoint(sft, left, symbols, rp, -depth)
    lo = min(y.core_start, depth)
    symbols = tuple(y.symbol_at(j) for j in range(lo, depth + 1))
    right = sft.shortest_cycle_through(symbols[-1])
    rp = right[1:] + right[:1]
    r = (lo - y.core_start) % len(y.left_period)
    lp = y.left_period[r:] + y.left_period[:r]
    return SymbolicPoint(sft, lp, symbols, rp, lo)


# -- axiom audit --------------------------------------------------------------


def fitted_decay_ratio(history) -> float:
    """Geometric ratio fitted to an iterate-residual sequence.

    Only the leading positive entries enter the fit; once the sequence
    hits zero the iteration has stabilized exactly, which counts as
    ratio 0 (faster than any geometric decay). Finite-range cocycles
    stabilize as soon as the window clears the disagreement, so short
    histories are the norm there, not a failure.
    """
    vals = []
    for r in history:
        if r <= 0.0:
            break
        vals.append(r)
    if len(vals) < 2:
        return 0.0
    logs = np.log(np.asarray(vals))
    slope = np.polyfit(np.arange(len(vals)), logs, 1)[0]
    return float(np.exp(slope))


@dataclass(frozen=True)
class HolonomyAudit:
    side: str
    pair_count: int
    composition_residuals: np.ndarray
    equivariance_residuals: np.ndarray
    continuity_rows: tuple  # (pair index, base distance, holonomy residual)
    truncations: np.ndarray
    iterate_residuals: np.ndarray
    decay_ratios: np.ndarray

    @property
    def max_composition(self) -> float:
        return float(np.max(self.composition_residuals))

    @property
    def max_equivariance(self) -> float:
        return float(np.max(self.equivariance_residuals))

    @property
    def max_decay_ratio(self) -> float:
        return float(np.max(self.decay_ratios))


def axiom_residuals(
    F: CocycleBase,
    mu: MarkovMeasure,
    pair_count: int,
    tol: float = 1e-10,
    seed: int = 0,
    side: str = "stable",
    core_length: int = 24,
    continuity_depths=(2, 4, 6, 8),
) -> HolonomyAudit:
    """Measured defects of the holonomy family on sampled local triples.

    Checks composition (x to y to z against x to z), equivariance under
    the shift, and how the holonomy moves when the far tail of the
    target is replaced, reported against the base distance that change
    makes.
    """
    if pair_count < 1:
        raise DomainError("need at least one pair")
    comp = np.empty(pair_count)
    equi = np.empty(pair_count)
    trunc = np.empty(pair_count, dtype=int)
    iters = np.empty(pair_count)
    ratios = np.empty(pair_count)
    cont = []
    for i in range(pair_count):
        x = sample_base(mu, core_length, seed=(seed, i, 0))
        y = local_partner(mu, x, core_length, seed=(seed, i, 1), side=side)
        z = local_partner(mu, x, core_length, seed=(seed, i, 2), side=side)
        h_xy = holonomy_map(F, x, y, side, tol)
        trunc[i] = h_xy.truncation
        iters[i] = h_xy.residual
        ratios[i] = fitted_decay_ratio(h_xy.residual_history)
        h_yz = holonomy_map(F, y, z, side, tol)
        h_xz = holonomy_map(F, x, z, side, tol)
        comp[i] = sup_distance(h_yz.map.compose(h_xy.map), h_xz.map)
        if side == "stable":
            lhs = holonomy_map(F, x.shift(1), y.shift(1), side, tol).map
            rhs = F.fiber_map(y).compose(h_xy.map).compose(F.fiber_map(x).invert())
        else:
            lhs = holonomy_map(F, x.shift(-1), y.shift(-1), side, tol).map
            fx, fy = F.fiber_map(x.shift(-1)), F.fiber_map(y.shift(-1))
            rhs = fy.invert().compose(h_xy.map).compose(fx)
        equi[i] = sup_distance(lhs, rhs)
        for depth in continuity_depths:
            yd = truncate_tail(y, depth, side)
            if yd == y:
                continue
            hd = holonomy_map(F, x, yd, side, tol)
            cont.append((i, shift_distance(y, yd, mu.metric_base), sup_distance(hd.map, h_xy.map)))
    return HolonomyAudit(side, pair_count, comp, equi, tuple(cont), trunc, iters, ratios)


# -- conjugation to a stable-constant cocycle ---------------------------------


class ConjugatedCocycle:
    """The cocycle rewritten in fiber charts aligned along stable sets.

    Conjugating each fiber by the holonomy from the point's anchored
    representative makes the fiber map depend only on the future of the
    base point, up to the holonomy truncation error. Maps are computed
    on demand and memoized per canonical base point.
    """

    def __init__(self, base: CocycleBase, anchors=None, tol: float = 1e-10):
        self.base = base
        self.sft = base.sft
        self.anchors = tuple(anchors) if anchors is not None else default_anchors(base.sft)
        self.tol = float(tol)
        self._chart_memo: dict = {}
        self._map_memo: dict = {}

    def chart(self, x: SymbolicPoint) -> CircleMap:
        """Holonomy from the anchored representative of x to x."""
        got = self._chart_memo.get(x)
        if got is None:
            rep = anchor_projection(x, self.anchors)
            got = holonomy_map(self.base, rep, x, "stable", self.tol).map
            self._chart_memo[x] = got
        return got

    def fiber_map(self, x: SymbolicPoint) -> CircleMap:
        got = self._map_memo.get(x)
        if got is None:
            ahead = self.chart(x.shift(1)).invert()
            got = ahead.compose(self.base.fiber_map(x)).compose(self.chart(x))
            self._map_memo[x] = got
        return got

    def orbit_maps(self, x: SymbolicPoint, steps: int):
        y = x
        for _ in range(steps):
            yield self.fiber_map(y)
            y = y.shift(1)


def conjugate_stable_constant(F: CocycleBase, anchors=None, tol: float = 1e-10) -> ConjugatedCocycle:
    """Charts along stable holonomy plus the rewritten cocycle."""
    return ConjugatedCocycle(F, anchors, tol)


def stable_constancy(
    Ft: ConjugatedCocycle,
    mu: MarkovMeasure,
    pair_count: int,
    seed: int = 0,
    core_length: int = 24,
) -> np.ndarray:
    """Fiber-map gaps over sampled stable pairs; all near zero when the
    conjugated cocycle only reads the future."""
    if pair_count < 1:
        raise DomainError("need at least one pair")
    out = np.empty(pair_count)
    for i in range(pair_count):
        x = sample_base(mu, core_length, seed=(seed, i, 0))
        y = local_partner(mu, x, core_length, seed=(seed, i, 1), side="stable")
        out[i] = sup_distance(Ft.fiber_map(x), Ft.fiber_map(y))
    return out


class OneSidedCocycle:
    """The conjugated cocycle read through forward coordinates only.

    A one-sided point is handled through its anchored two-sided
    representative; by stable constancy the choice of representative
    moves the map by at most the holonomy tolerance.
    """

    def __init__(self, tilde: ConjugatedCocycle):
        self.tilde = tilde
        self.sft = tilde.sft
        self.anchors = tilde.anchors

    def representative(self, x: SymbolicPoint) -> SymbolicPoint:
        return anchor_projection(x, self.anchors)

    def fiber_map(self, x: SymbolicPoint) -> CircleMap:
        return self.tilde.fiber_map(self.representative(x))

    def projection_residual(self, x: SymbolicPoint) -> float:
        """Gap between reading the map at x and at its representative."""
        return sup_distance(self.fiber_map(x), self.tilde.fiber_map(x))


def project_one_sided(Ft: ConjugatedCocycle) -> OneSidedCocycle:
    return OneSidedCocycle(Ft)


def projection_residuals(
    Fh: OneSidedCocycle,
    mu: MarkovMeasure,
    sample_count: int,
    seed: int = 0,
    core_length: int = 24,
) -> np.ndarray:
    if sample_count < 1:
        raise DomainError("need at least one sample")
    out = np.empty(sample_count)
    for i in range(sample_count):
        x = sample_base(mu, core_length, seed=(seed, i))
        out[i] = Fh.projection_residual(x)
    return out
