"""Named ready-to-run experiment setups.

Each preset bundles a subshift, a Markov base measure, a cocycle over
it, and the metric base into one reproducible object. The seeded
presets build their window tables from a fixed generator seed, so two
processes constructing the same preset agree bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circle import CircleMap, mobius_map, pwl_map, rotation
from .cocycle import CocycleBase, TableCocycle, constant_cocycle, symbol_cocycle
from .errors import DomainError
from .symbolic import MarkovMeasure, Sft, bernoulli_measure, markov_measure

# close to 2 - golden ratio; badly approximable, so rotation orbits
# spread out evenly at every scale
ROTATION_ANGLE = 0.3819660113

DEFAULT_RHO = 2.0


def pinched_map() -> CircleMap:
    """Degree-one map fixing 0 (attracting, slope 0.6) and 1/2 (repelling).

    The slope gap is wide enough that the fiber contraction survives
    Monte-Carlo averaging against the rotations mixed in by the other
    symbol, while staying well below the domination threshold.
    """
    return pwl_map([0.0, 0.25, 0.5, 0.75], [0.0, 0.15, 0.5, 0.85])


@dataclass(frozen=True)
class Preset:
    """A complete experiment setup under one name."""

    name: str
    sft: Sft
    measure: MarkovMeasure
    cocycle: CocycleBase
    rho: float
    summary: str


def rotation_preset() -> Preset:
    """Constant irrational rotation over the fair-coin full 2-shift."""
    sft = Sft.full_shift(2)
    return Preset(
        name="rotation",
        sft=sft,
        measure=bernoulli_measure(sft, [0.5, 0.5], DEFAULT_RHO),
        cocycle=constant_cocycle(sft, rotation(ROTATION_ANGLE)),
        rho=DEFAULT_RHO,
        summary="isometric fibers, zero exponent, no pinching",
    )


def mobius_preset() -> Preset:
    """Constant projective map diag(2, 1/2) over the fair-coin 2-shift.

    The fiber map fixes 0 (attracting, derivative 1/4) and 1/2
    (repelling), so the cocycle is pinched with contraction rate
    -2 log 2 at the attractor.
    """
    sft = Sft.full_shift(2)
    return Preset(
        name="mobius",
        sft=sft,
        measure=bernoulli_measure(sft, [0.5, 0.5], DEFAULT_RHO),
        cocycle=constant_cocycle(sft, mobius_map([[2.0, 0.0], [0.0, 0.5]])),
        rho=DEFAULT_RHO,
        summary="constant pinched projective fibers",
    )


def mixed_preset() -> Preset:
    """Pinched map on symbol 0, irrational rotation on symbol 1.

    Lives over the golden-mean shift so the pinched symbol dominates
    the orbit statistics; the all-zeros fixed point is a pinching
    witness while the rotations keep the cocycle nontrivial.
    """
    sft = Sft.golden_mean()
    maps = [pinched_map(), rotation(ROTATION_ANGLE)]
    return Preset(
        name="mixed",
        sft=sft,
        measure=markov_measure(sft, [[2.0 / 3.0, 1.0 / 3.0], [1.0, 0.0]], DEFAULT_RHO),
        cocycle=symbol_cocycle(sft, maps),
        rho=DEFAULT_RHO,
        summary="pinched and rotation fibers mixed over the golden-mean shift",
    )


def pwl_r1_preset(seed: int = 5) -> Preset:
    """Window-dependent gentle two-piece maps, range one.

    Every window map has slopes in [0.85, 1.15], far below the base
    expansion 2, so the cocycle is dominated and all holonomies
    converge fast.
    """
    sft = Sft.full_shift(2)
    rng = np.random.default_rng(seed)
    table = {}
    for word in sft.admissible_words(3):
        s1 = 0.85 + 0.3 * rng.random()
        v0 = rng.random()
        table[word] = CircleMap([0.0, 0.5], [v0, v0 + s1 / 2.0])
    return Preset(
        name="pwl-r1",
        sft=sft,
        measure=bernoulli_measure(sft, [0.5, 0.5], DEFAULT_RHO),
        cocycle=TableCocycle(sft, 1, table),
        rho=DEFAULT_RHO,
        summary="dominated range-one cocycle with mild slopes",
    )


def isometry_r1_preset(seed: int = 11) -> Preset:
    """Window-dependent rotations, range one: exponents exactly zero."""
    sft = Sft.full_shift(2)
    rng = np.random.default_rng(seed)
    table = {w: rotation(float(rng.random())) for w in sft.admissible_words(3)}
    return Preset(
        name="isometry-r1",
        sft=sft,
        measure=bernoulli_measure(sft, [0.5, 0.5], DEFAULT_RHO),
        cocycle=TableCocycle(sft, 1, table),
        rho=DEFAULT_RHO,
        summary="range-one rotation fibers, the su-state model case",
    )


PRESETS = {
    "rotation": rotation_preset,
    "mobius": mobius_preset,
    "mixed": mixed_preset,
    "pwl-r1": pwl_r1_preset,
    "isometry-r1": isometry_r1_preset,
}


def get_preset(name: str) -> Preset:
    builder = PRESETS.get(name)
    if builder is None:
        known = ", ".join(sorted(PRESETS))
        raise DomainError(f"unknown preset {name!r}; known presets: {known}")
    return builder()
