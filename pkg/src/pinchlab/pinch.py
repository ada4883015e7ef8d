"""Pinched return maps and the rotation-bump perturbation built on them.

The chain implemented here: find a periodic base point whose fiber
return map has an attracting and a repelling fixed point, bridge it to
itself through a homoclinic point, surround that point with a Lipschitz
bump supported away from the rest of its orbit, pick a rotation size
that keeps the perturbation small while separating the transported
fixed points, and apply the bump-scaled rotation to every fiber map.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circle import (
    CircleMap,
    circle_distance,
    classify_fixed_points,
    map_distance,
    sup_distance,
)
from .cocycle import (
    CocycleBase,
    base_holder_constant,
    fiber_compose,
    window_separation,
)
from .errors import DomainError, NonConvergenceError, PreconditionError
from .holonomy import Holonomy, holonomy_map
from .symbolic import (
    HomoclinicPoint,
    SymbolicPoint,
    Word,
    agreement_radius,
    homoclinic_point,
    periodic_point,
)

_MAX_HALVINGS = 40


# -- pinching detection -------------------------------------------------------


@dataclass(frozen=True)
class PinchingWitness:
    """Periodic point whose fiber return map pinches the circle."""

    point: SymbolicPoint
    period: int
    attracting: float
    repelling: float


def _necklaces(sft, length: int):
    """Primitive cyclically admissible words, one per rotation class."""
    for w in sft.admissible_words(length):
        if not sft.transitions[w[-1], w[0]]:
            continue
        rotations = [w[i:] + w[:i] for i in range(length)]
        if len(set(rotations)) != length:  # proper power of a shorter word
            continue
        if w != min(rotations):
            continue
        yield w


def detect_pinching(F: CocycleBase, max_period: int) -> PinchingWitness | None:
    """First periodic point (by period, then word order) whose return map
    has at least one attracting and one repelling fixed point."""
    if max_period < 1:
        raise DomainError("max_period must be at least 1")
    for length in range(1, max_period + 1):
        for w in _necklaces(F.sft, length):
            x0 = periodic_point(F.sft, w)
            return_map = fiber_compose(F, x0, length)
            try:
                fixed = classify_fixed_points(return_map)
            except DomainError:  # identity return map: nothing is isolated
                continue
            attracting = [p for p, kind in fixed if kind == "attracting"]
            repelling = [p for p, kind in fixed if kind == "repelling"]
            if attracting and repelling:
                return PinchingWitness(x0, length, attracting[0], repelling[0])
    return None


# -- eta maps -----------------------------------------------------------------


@dataclass(frozen=True)
class EtaMaps:
    """Fiber identifications from the periodic point to the homoclinic one.

    eta1 rides the stable holonomy forward and back through the bridge,
    eta2 rides the unstable holonomy; both map the fiber over the
    periodic point to the fiber over the homoclinic center.
    """

    eta1: CircleMap
    eta2: CircleMap
    stable: Holonomy
    unstable: Holonomy


def eta_maps(
    G: CocycleBase,
    witness: PinchingWitness,
    z: SymbolicPoint,
    k1: int,
    k2: int,
    tol: float = 1e-10,
) -> EtaMaps:
    if k1 < 1 or k2 < 1:
        raise DomainError("bridge clearances k1, k2 must be at least 1")
    if z.sft != G.sft:
        raise DomainError("homoclinic point lives over a different subshift")
    hs = holonomy_map(G, witness.point, z.shift(k1), "stable", tol)
    hu = holonomy_map(G, witness.point, z.shift(-k2), "unstable", tol)
    eta1 = fiber_compose(G, z, k1).invert().compose(hs.map)
    eta2 = fiber_compose(G, z.shift(-k2), k2).compose(hu.map)
    return EtaMaps(eta1, eta2, hs, hu)


# -- bump function ------------------------------------------------------------


class BumpFunction:
    """Lipschitz plateau around a base point, metric-radial and exact.

    Takes the value 1 where the agreement radius with the center is at
    least the inner exponent, 0 where it is at most the outer exponent,
    and interpolates linearly in the metric in between; the Lipschitz
    constant is exactly the reciprocal of the radius gap.
    """

    __slots__ = ("center", "outer_exponent", "inner_exponent", "rho",
                 "outer_radius", "inner_radius", "lipschitz")

    def __init__(self, center: SymbolicPoint, outer_exponent: int,
                 inner_exponent: int, rho: float) -> None:
        if not rho > 1.0:
            raise DomainError("metric base must exceed 1")
        if outer_exponent < 1 or inner_exponent <= outer_exponent:
            raise DomainError("need 1 <= outer exponent < inner exponent")
        self.center = center
        self.outer_exponent = int(outer_exponent)
        self.inner_exponent = int(inner_exponent)
        self.rho = float(rho)
        self.outer_radius = self.rho ** (-self.outer_exponent)
        self.inner_radius = self.rho ** (-self.inner_exponent)
        self.lipschitz = 1.0 / (self.outer_radius - self.inner_radius)

    def _phi(self, radius: int) -> float:
        t = (self.outer_radius - self.rho ** (-radius)) / (self.outer_radius - self.inner_radius)
        return min(max(t, 0.0), 1.0)

    def value(self, x: SymbolicPoint) -> float:
        a = agreement_radius(x, self.center)
        a = self.inner_exponent if a is None else min(a, self.inner_exponent)
        return self._phi(a)

    def profile_level(self, agreement: int) -> float:
        """Bump value at a given agreement radius with the center."""
        if agreement < 0:
            raise DomainError("agreement radius must be nonnegative")
        return self._phi(min(int(agreement), self.inner_exponent))

    def window_value(self, word: Word, radius: int) -> float:
        """The bump on the cylinder of a centered window word.

        Well defined because the bump only reads the agreement radius
        with its center, capped at the inner exponent; the window must
        be at least that wide.
        """
        if radius < self.inner_exponent:
            raise DomainError("window too short to determine the bump value")
        if len(word) != 2 * radius + 1:
            raise DomainError("window word does not match the stated radius")
        a = self.inner_exponent
        for m in range(self.inner_exponent):
            if (word[radius + m] != self.center.symbol_at(m)
                    or word[radius - m] != self.center.symbol_at(-m)):
                a = m
                break
        return self._phi(a)


def _orbit_violation(z: SymbolicPoint, outer_exponent: int) -> int | None:
    """Shift count whose image enters the bump support, if any exists.

    Once the shifted window lies entirely in a periodic tail the
    agreement radius depends on the shift only through its residue mod
    the tail period, so scanning one extra period each side decides
    every larger shift.
    """
    m = outer_exponent
    hi = max(z.core_end, 1) + m + len(z.right_period) - 2
    lo = min(z.core_start, 0) - m - len(z.left_period) + 1
    for n in range(lo, hi + 1):
        if n == 0:
            continue
        a = agreement_radius(z.shift(n), z)
        if a is None or a >= m:
            return n
    return None


def bump_function(
    z: SymbolicPoint,
    outer_exponent: int,
    inner_exponent: int,
    rho: float,
    exclude=(),
) -> BumpFunction:
    """Bump centered at z whose support avoids the rest of z's orbit.

    Every nonzero shift of z, and every extra point passed in exclude,
    must sit strictly outside the outer radius; violations name the
    offending point.
    """
    bump = BumpFunction(z, outer_exponent, inner_exponent, rho)
    n = _orbit_violation(z, outer_exponent)
    if n is not None:
        raise DomainError(f"orbit point shift({n}) of the center enters the bump support")
    for e in exclude:
        a = agreement_radius(e, z)
        if a is None or a >= outer_exponent:
            raise DomainError(f"excluded point {e} enters the bump support")
    return bump


# -- rotation size ------------------------------------------------------------


@dataclass(frozen=True)
class DeltaChoice:
    delta: float
    halvings: int
    upper_bound: float   # eps / (2 H1)
    separation: float    # achieved min cross distance at this delta

    def __float__(self) -> float:
        return self.delta


def _cross_separation(delta: float, eta1: CircleMap, eta2: CircleMap,
                      attracting: float, repelling: float) -> float:
    rotated = (eta1(attracting) + delta, eta1(repelling) + delta)
    targets = (eta2(attracting), eta2(repelling))
    return min(float(circle_distance(p, q)) for p in rotated for q in targets)


def choose_delta(
    eps: float,
    bump: BumpFunction,
    eta1: CircleMap,
    eta2: CircleMap,
    attracting: float,
    repelling: float,
    margin: float,
) -> DeltaChoice:
    """Largest halving of eps/(2 H1) whose rotation separates the eta
    images of the two fixed points by at least the margin."""
    if eps <= 0.0:
        raise DomainError("eps must be positive")
    if margin <= 0.0:
        raise DomainError("margin must be positive")
    cap = eps / (2.0 * bump.lipschitz)
    seen = []
    for j in range(1, _MAX_HALVINGS + 1):
        delta = cap * 2.0 ** (-j)
        sep = _cross_separation(delta, eta1, eta2, attracting, repelling)
        if sep >= margin:
            return DeltaChoice(delta, j, cap, sep)
        seen.append(sep)
    raise NonConvergenceError(
        "no rotation separates the eta images by the margin "
        f"{margin:g}; best separations seen: {max(seen):.3e}"
    )


# -- the perturbed cocycle ----------------------------------------------------


class BumpPerturbedCocycle(CocycleBase):
    """Base cocycle with each fiber map post-rotated by (bump value)*delta.

    The bump is locally constant on windows reaching its inner
    exponent, so the result is again a finite-range cocycle. Windows
    where the bump vanishes keep the base map object itself; rotations
    preserve slopes, so domination checks may consult the base.
    """

    def __init__(self, base: CocycleBase, bump: BumpFunction, delta: float):
        if bump.center.sft != base.sft:
            raise DomainError("bump center lives over a different subshift")
        if not abs(delta) < 0.5:
            raise DomainError("rotation size must have absolute value below 1/2")
        self.sft = base.sft
        self.window_radius = max(base.window_radius, bump.inner_exponent)
        self.alpha = base.alpha
        self.beta = base.beta
        self.base = base
        self.bump = bump
        self.delta = float(delta)

    @property
    def domination_proxy(self) -> CocycleBase:
        return self.base

    def _turned(self, phi: float, fw: CircleMap) -> CircleMap:
        if phi == 0.0 or self.delta == 0.0:
            return fw
        return fw.rotated(phi * self.delta)

    def window_map(self, word: Word) -> CircleMap:
        word = self._trim(tuple(int(s) for s in word))
        phi = self.bump.window_value(word, self.window_radius)
        return self._turned(phi, self.base.window_map(word))

    def fiber_map(self, x: SymbolicPoint) -> CircleMap:
        if x.sft != self.sft:
            raise DomainError("point lives over a different subshift")
        return self._turned(self.bump.value(x), self.base.fiber_map(x))


def perturb(F: CocycleBase, bump: BumpFunction, delta: float) -> BumpPerturbedCocycle:
    return BumpPerturbedCocycle(F, bump, delta)


# -- distance to the base, computed through the bump structure ----------------


def _deviation_possible(z: SymbolicPoint, t: int) -> bool:
    # can a window agree with z's strictly inside position t and differ
    # at +t or -t admissibly? (strong connectivity extends any such word)
    T = z.sft.transitions
    k = z.sft.alphabet_size
    right = any(T[z.symbol_at(t - 1), s] and s != z.symbol_at(t) for s in range(k))
    left = any(T[s, z.symbol_at(-t + 1)] and s != z.symbol_at(-t) for s in range(k))
    return right or left


def bump_cocycle_distance(G: BumpPerturbedCocycle, rho: float) -> float:
    """Distance between the perturbed cocycle and its base.

    Evaluates the same two-term quantity as the generic cocycle
    distance, but through the finitely many map classes the bump
    creates instead of enumerating every padded window: windows with
    positive bump value share the center's base map, and the variation
    constant only sees pairs through their agreement radii with the
    center.
    """
    if not isinstance(G, BumpPerturbedCocycle):
        raise DomainError("structured distance needs a bump-perturbed cocycle")
    if rho <= 1.0:
        raise DomainError("metric base must exceed 1")
    F, bump = G.base, G.bump
    m, mp = bump.outer_exponent, bump.inner_exponent
    r = F.window_radius
    if m < r:
        raise DomainError("bump outer exponent must not cut into the base window")
    if G.delta == 0.0:
        return 0.0
    z = bump.center
    fz = F.fiber_map(z)
    alpha, beta = F.alpha, F.beta

    # agreement radii with the center that admissible windows realize
    deviation = {t: _deviation_possible(z, t) for t in range(1, mp)}
    plateau = [a for a in range(m + 1, mp) if deviation[a]] + [mp]
    turned = {a: fz.rotated(bump._phi(a) * G.delta) for a in plateau}

    sup_term = max(map_distance(fz, turned[a], beta)[1] for a in plateau)

    centrals = list(F.sft.admissible_words(2 * r + 1))
    maps = {c: F.window_map(c) for c in centrals}
    zc = tuple(z.symbol_at(j) for j in range(-r, r + 1))
    # positions where a zero-bump window can share the center's central word
    low = [t for t in range(r + 1, m + 1) if deviation.get(t, _deviation_possible(z, t))]

    def feasible(c: Word) -> bool:
        return c != zc or bool(low)

    varied = 0.0
    for i, c in enumerate(centrals):  # both windows outside the bump
        for cc in centrals[i + 1:]:
            if not (feasible(c) and feasible(cc)):
                continue
            s = window_separation(c, cc)
            d = map_distance(maps[c], maps[cc], beta)[1]
            varied = max(varied, d * rho ** (alpha * s))
    for a in plateau:  # inside the bump against outside
        for c in centrals:
            if c == zc:
                if low:
                    d = map_distance(turned[a], maps[c], beta)[1]
                    varied = max(varied, d * rho ** (alpha * max(low)))
            else:
                s = window_separation(c, zc)
                d = map_distance(turned[a], maps[c], beta)[1]
                varied = max(varied, d * rho ** (alpha * s))
    for i, a in enumerate(plateau):  # two windows inside at different depths
        for aa in plateau[i + 1:]:
            d = map_distance(turned[a], turned[aa], beta)[1]
            varied = max(varied, d * rho ** (alpha * min(a, aa)))

    return sup_term + abs(varied - base_holder_constant(F, rho))


# -- the full construction ----------------------------------------------------


@dataclass(frozen=True)
class PerturbationResult:
    """Everything the perturbation produced, with its measured bounds."""

    cocycle: BumpPerturbedCocycle
    witness: PinchingWitness
    homoclinic: HomoclinicPoint
    bump: BumpFunction
    choice: DeltaChoice
    eps: float
    distance: float
    eta_base: EtaMaps
    eta_perturbed: EtaMaps
    rotation_residual: float   # eta1 of g against the rotated eta1 of f
    unstable_residual: float   # eta2 of g against eta2 of f
    displacement: float        # how far eta2^-1 o eta1 moves the attractor


def _bridge_candidates(sft, max_length: int):
    for length in range(1, max_length + 1):
        yield from sft.admissible_words(length)


def build_perturbation(
    F: CocycleBase,
    witness: PinchingWitness,
    eps: float,
    outer_exponent: int,
    inner_exponent: int,
    rho: float,
    margin: float = 0.01,
    tol: float = 1e-10,
    max_bridge_length: int = 4,
) -> PerturbationResult:
    """Run the whole homoclinic rotation-bump construction.

    Searches for the shortest admissible homoclinic bridge whose bump
    support avoids the orbit, sizes the rotation, perturbs, and then
    re-derives the eta maps of the result to measure how the
    construction moved them.
    """
    if eps <= 0.0:
        raise DomainError("eps must be positive")
    x0 = witness.point
    orbit = [x0.shift(j) for j in range(witness.period)]
    hp = bump = None
    for word in _bridge_candidates(F.sft, max_bridge_length):
        try:
            cand = homoclinic_point(x0, word, ())
            bump = bump_function(cand.point, outer_exponent, inner_exponent,
                                 rho, exclude=orbit)
        except DomainError:
            continue
        hp = cand
        break
    if hp is None:
        raise PreconditionError(
            f"no homoclinic bridge up to length {max_bridge_length} "
            "keeps the bump support off the orbit"
        )
    eta_f = eta_maps(F, witness, hp.point, hp.k_forward, hp.k_backward, tol)
    choice = choose_delta(eps, bump, eta_f.eta1, eta_f.eta2,
                          witness.attracting, witness.repelling, margin)
    G = perturb(F, bump, choice.delta)
    distance = bump_cocycle_distance(G, rho)
    if not distance < eps:
        raise PreconditionError(
            f"perturbation distance {distance:.3e} does not stay below eps {eps:g}"
        )
    eta_g = eta_maps(G, witness, hp.point, hp.k_forward, hp.k_backward, tol)
    rotation_residual = sup_distance(eta_g.eta1, eta_f.eta1.rotated(choice.delta))
    unstable_residual = sup_distance(eta_g.eta2, eta_f.eta2)
    moved = eta_g.eta2.invert()(eta_g.eta1(witness.attracting))
    displacement = min(float(circle_distance(moved, witness.attracting)),
                       float(circle_distance(moved, witness.repelling)))
    return PerturbationResult(
        cocycle=G, witness=witness, homoclinic=hp, bump=bump, choice=choice,
        eps=eps, distance=distance, eta_base=eta_f, eta_perturbed=eta_g,
        rotation_residual=rotation_residual, unstable_residual=unstable_residual,
        displacement=displacement,
    )
