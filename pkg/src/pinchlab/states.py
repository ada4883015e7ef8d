"""Fiber-measure families over the base, their defects, and recovery.

A disintegration assigns a probability measure on the circle to each
sampled base point. The estimator pushes a uniform atomic measure
forward along a backward orbit segment; the defect scores measure how
far the family is from being holonomy-invariant, and the conjugated and
one-sided quotients rewrite it in stable charts where invariance can be
read off the future alone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cocycle import CocycleBase, fiber_compose
from .errors import DomainError, NonConvergenceError, PreconditionError
from .holonomy import OneSidedCocycle, holonomy_map, local_partner
from .measures import FiberMeasure, transport_distance
from .pinch import PinchingWitness
from .symbolic import (
    MarkovMeasure,
    SymbolicPoint,
    anchor_projection,
    default_anchors,
    sample_base,
)


@dataclass(frozen=True)
class DisintegrationMeta:
    """Everything needed to rebuild the family deterministically."""

    depth: int
    atom_count: int
    seed: object
    base_id: str


class Disintegration:
    """Fiber measures keyed by canonical base point.

    Families built by an estimator carry their kernel and extend to new
    points on demand; hand-built families know only the points they
    were given and refuse others, naming the missing point.
    """

    __slots__ = ("kernel", "meta", "samples")

    def __init__(self, kernel=None, meta: DisintegrationMeta | None = None, samples=None):
        self.kernel = kernel
        self.meta = meta or DisintegrationMeta(0, 0, None, "manual")
        self.samples: dict = dict(samples) if samples else {}

    @classmethod
    def from_samples(cls, samples, meta: DisintegrationMeta | None = None) -> "Disintegration":
        return cls(kernel=None, meta=meta, samples=samples)

    @classmethod
    def constant(cls, m: FiberMeasure, base_id: str = "constant") -> "Disintegration":
        return cls(kernel=lambda x: m, meta=DisintegrationMeta(0, 0, None, base_id))

    def knows(self, x: SymbolicPoint) -> bool:
        return self.kernel is not None or x in self.samples

    def measure_at(self, x: SymbolicPoint) -> FiberMeasure:
        got = self.samples.get(x)
        if got is None:
            if self.kernel is None:
                raise DomainError(f"no fiber measure sampled at {x}")
            got = self.kernel(x)
            self.samples[x] = got
        return got

    def points(self) -> list:
        return list(self.samples)

    def __repr__(self) -> str:
        tag = "extendable" if self.kernel is not None else "fixed"
        return f"Disintegration({len(self.samples)} points, {tag})"


def _markov_id(mu: MarkovMeasure) -> str:
    rows = ";".join(",".join(repr(v) for v in row) for row in mu.stochastic.tolist())
    return f"markov[{rows}]"


def estimate_invariant_disintegration(
    F: CocycleBase,
    mu: MarkovMeasure,
    depth: int,
    atom_count: int,
    points=(),
    seed=0,
) -> Disintegration:
    """Backward-pushforward estimate of an invariant family of fibers.

    The measure at x is the image of atom_count uniform atoms under the
    orbit composition starting depth steps in the past; depth 0 returns
    the uniform atoms themselves. Deterministic given its meta.
    """
    if depth < 0:
        raise DomainError("depth must be nonnegative")
    if atom_count < 1:
        raise DomainError("need at least one atom")
    if mu.sft != F.sft:
        raise DomainError("measure and cocycle live over different subshifts")

    def kernel(x: SymbolicPoint) -> FiberMeasure:
        m = FiberMeasure.uniform_atoms(atom_count)
        for f in F.orbit_maps(x.shift(-depth), depth):
            m = m.pushforward(f)
        return m

    D = Disintegration(kernel, DisintegrationMeta(depth, atom_count, seed, _markov_id(mu)))
    for x in points:
        D.measure_at(x)
    return D


def family_invariance_residuals(F: CocycleBase, D: Disintegration, points) -> np.ndarray:
    """transport((f_x)* m_x, m_{shift(x)}) over the given points."""
    out = []
    for x in points:
        pushed = D.measure_at(x).pushforward(F.fiber_map(x))
        out.append(transport_distance(pushed, D.measure_at(x.shift(1))))
    if not out:
        raise DomainError("need at least one point")
    return np.asarray(out)


# -- holonomy defect scores ---------------------------------------------------


@dataclass(frozen=True)
class StateDefectReport:
    """Transport gaps between holonomy-transported and stored fibers."""

    side: str
    distances: np.ndarray
    skipped: tuple

    @property
    def mean(self) -> float:
        return float(np.mean(self.distances)) if self.distances.size else 0.0

    @property
    def max(self) -> float:
        return float(np.max(self.distances)) if self.distances.size else 0.0

    @property
    def pair_count(self) -> int:
        return int(self.distances.size)


def _one_sided_defect(F, D, mu, side, pair_count, tol, seed, core_length):
    tag = 0 if side == "stable" else 1
    distances = []
    skipped = []
    for i in range(pair_count):
        x = sample_base(mu, core_length, seed=(seed, tag, i, 0))
        y = local_partner(mu, x, core_length, seed=(seed, tag, i, 1), side=side)
        try:
            h = holonomy_map(F, x, y, side, tol)
        except (NonConvergenceError, PreconditionError) as err:
            skipped.append((side, i, str(err)))
            continue
        moved = D.measure_at(x).pushforward(h.map)
        distances.append(transport_distance(D.measure_at(y), moved))
    return np.asarray(distances), skipped


def state_defect(
    F: CocycleBase,
    D: Disintegration,
    mu: MarkovMeasure,
    side: str = "both",
    pair_count: int = 40,
    tol: float = 1e-8,
    seed: int = 0,
    core_length: int = 24,
) -> StateDefectReport:
    """How far the family is from holonomy invariance on sampled pairs.

    For each sampled pair (x, y) with y on the local stable or unstable
    set of x, compares m_y with the holonomy transport of m_x; "both"
    concatenates the two sides, so its max is the larger side score.
    Pairs whose holonomy fails are skipped and reported.
    """
    if side not in ("stable", "unstable", "both"):
        raise DomainError("side must be 'stable', 'unstable', or 'both'")
    if pair_count < 1:
        raise DomainError("need at least one pair")
    sides = ("stable", "unstable") if side == "both" else (side,)
    chunks, skipped = [], []
    for s in sides:
        d, sk = _one_sided_defect(F, D, mu, s, pair_count, tol, seed, core_length)
        chunks.append(d)
        skipped.extend(sk)
    return StateDefectReport(side, np.concatenate(chunks), tuple(skipped))


# -- stable charts and the one-sided quotient ---------------------------------


def conjugated_disintegration(
    F: CocycleBase,
    D: Disintegration,
    anchors=None,
    tol: float = 1e-10,
) -> tuple[Disintegration, Disintegration]:
    """Rewrite the family in stable charts, then index it by futures.

    The first family transports each fiber to its anchored
    representative along stable holonomy; the second reads the result
    at the representative itself, so points sharing a future share a
    measure by construction. Holonomy failures propagate.
    """
    anchors = anchors if anchors is not None else default_anchors(F.sft)

    def tilde_kernel(x: SymbolicPoint) -> FiberMeasure:
        rep = anchor_projection(x, anchors)
        if rep == x:
            return D.measure_at(x)
        h = holonomy_map(F, x, rep, "stable", tol)
        return D.measure_at(x).pushforward(h.map)

    meta = D.meta
    tilde = Disintegration(tilde_kernel, DisintegrationMeta(
        meta.depth, meta.atom_count, meta.seed, meta.base_id + ":tilde"))

    def hat_kernel(x: SymbolicPoint) -> FiberMeasure:
        return tilde.measure_at(anchor_projection(x, anchors))

    hat = Disintegration(hat_kernel, DisintegrationMeta(
        meta.depth, meta.atom_count, meta.seed, meta.base_id + ":hat"))
    return tilde, hat


def quotient_gaps(
    Dtilde: Disintegration,
    mu: MarkovMeasure,
    pair_count: int = 20,
    seed: int = 0,
    core_length: int = 24,
) -> np.ndarray:
    """Well-posedness check of the future quotient.

    Transport distances between chart-aligned fibers over pairs with
    equal futures; small values mean the conjugated family descends to
    one-sided points.
    """
    if pair_count < 1:
        raise DomainError("need at least one pair")
    out = np.empty(pair_count)
    for i in range(pair_count):
        x = sample_base(mu, core_length, seed=(seed, i, 0))
        y = local_partner(mu, x, core_length, seed=(seed, i, 1), side="stable")
        out[i] = transport_distance(Dtilde.measure_at(x), Dtilde.measure_at(y))
    return out


@dataclass(frozen=True)
class InvarianceReport:
    distances: np.ndarray
    skipped: tuple

    @property
    def mean(self) -> float:
        return float(np.mean(self.distances)) if self.distances.size else 0.0

    @property
    def max(self) -> float:
        return float(np.max(self.distances)) if self.distances.size else 0.0


def invariance_residual(ghat: OneSidedCocycle, Dhat: Disintegration, points) -> InvarianceReport:
    """How far the one-sided family is from being carried by the cocycle.

    Compares the measure at the shifted representative with the
    pushforward of the measure at the representative itself; points
    whose fibers are not sampled are skipped and reported.
    """
    distances, skipped = [], []
    for x in points:
        rep = ghat.representative(x)
        ahead = ghat.representative(rep.shift(1))
        try:
            m = Dhat.measure_at(rep)
            target = Dhat.measure_at(ahead)
        except DomainError as err:
            skipped.append((rep, str(err)))
            continue
        distances.append(transport_distance(target, m.pushforward(ghat.fiber_map(rep))))
    if not distances and not skipped:
        raise DomainError("need at least one point")
    return InvarianceReport(np.asarray(distances), tuple(skipped))


# -- martingale recovery ------------------------------------------------------


@dataclass(frozen=True)
class MartingaleRow:
    depth: int
    measure: FiberMeasure
    residual: float


def martingale_recovery(
    ghat: OneSidedCocycle,
    Dhat: Disintegration,
    x: SymbolicPoint,
    n_list,
) -> tuple[MartingaleRow, ...]:
    """Recover the chart-aligned fiber at x from deep backward projections.

    For each depth n, takes the one-sided fiber at the projection of
    shift(-n, x) and pushes it forward n steps; the residual compares
    the result with the fiber at the projection of x itself. All
    required fibers are checked up front and missing ones are reported
    together, never filled silently.
    """
    depths = [int(n) for n in n_list]
    if not depths or any(n < 0 for n in depths):
        raise DomainError("need a nonempty list of nonnegative depths")
    target_rep = ghat.representative(x)
    needed = [target_rep] + [ghat.representative(x.shift(-n)) for n in depths]
    missing = [p for p in needed if not Dhat.knows(p)]
    if missing:
        raise DomainError(f"missing fiber samples at: {missing}")
    target = Dhat.measure_at(target_rep)
    rows = []
    for n in depths:
        y = x.shift(-n)
        m = Dhat.measure_at(ghat.representative(y))
        for k in range(n):
            m = m.pushforward(ghat.fiber_map(y.shift(k)))
        rows.append(MartingaleRow(n, m, transport_distance(m, target)))
    return tuple(rows)


# -- the fiber over a pinching witness ----------------------------------------


def _mass_near(m: FiberMeasure, center: float, tol: float) -> float:
    lo, hi = center - tol, center + tol
    if lo >= 0.0 and hi <= 1.0:
        return float(m.cdf_right(hi) - m.cdf_left(lo))
    if lo < 0.0:
        return float(m.cdf_right(hi) + 1.0 - m.cdf_left(lo + 1.0))
    return float(1.0 - m.cdf_left(lo) + m.cdf_right(hi - 1.0))


@dataclass(frozen=True)
class PeriodicSupportReport:
    invariance_residual: float
    attractor_mass: float
    repeller_mass: float
    outside_mass: float
    tol: float


def periodic_fiber_support(
    F: CocycleBase,
    D: Disintegration,
    witness: PinchingWitness,
    tol: float = 1e-3,
) -> PeriodicSupportReport:
    """Where the fiber over the witness sits relative to its fixed points.

    Reports the return-map invariance residual of the fiber measure and
    its mass within tol of the attractor and of the repeller; for an
    invariant family of a pinching cocycle the outside mass decays with
    estimator depth.
    """
    if not 0.0 < tol < 0.5:
        raise DomainError("tol must lie in (0, 1/2)")
    m0 = D.measure_at(witness.point)
    g0 = fiber_compose(F, witness.point, witness.period)
    residual = transport_distance(m0.pushforward(g0), m0)
    near_a = _mass_near(m0, witness.attracting, tol)
    near_r = _mass_near(m0, witness.repelling, tol)
    return PeriodicSupportReport(
        invariance_residual=residual,
        attractor_mass=near_a,
        repeller_mass=near_r,
        outside_mass=max(0.0, 1.0 - near_a - near_r),
        tol=tol,
    )
