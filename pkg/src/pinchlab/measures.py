"""Probability measures on the circle and exact transport between them.

Measures come in two shapes: finitely many weighted atoms, or an
absolutely continuous law given by a piecewise-linear distribution
function on [0, 1]. Both are closed under pushforward by the
piecewise-linear circle maps of this package, and the circular
1-Wasserstein distance between any two of them is computed in closed
form: it is the minimum over offsets c of the integral of
|F1 - F2 - c|, reached at a level median of the difference.
"""
from __future__ import annotations

import numpy as np

from .circle import CircleMap
from .errors import DomainError

_WEIGHT_TOL = 1e-9


class FiberMeasure:
    """A Borel probability measure on R/Z, atomic or piecewise uniform."""

    __slots__ = ("kind", "positions", "weights", "nodes", "cdf")

    def __init__(self, kind, positions=None, weights=None, nodes=None, cdf=None):
        if kind not in ("atoms", "density"):
            raise DomainError("kind must be 'atoms' or 'density'")
        self.kind = kind
        if kind == "atoms":
            p = np.mod(np.asarray(positions, dtype=float), 1.0)
            if p.ndim != 1 or p.size == 0:
                raise DomainError("atom positions must be a non-empty 1-d array")
            if weights is None:
                w = np.full(p.size, 1.0 / p.size)
            else:
                w = np.asarray(weights, dtype=float)
            if w.shape != p.shape or np.any(w <= 0):
                raise DomainError("atom weights must be positive and match positions")
            if abs(w.sum() - 1.0) > _WEIGHT_TOL:
                raise DomainError("atom weights must sum to 1")
            order = np.argsort(p, kind="stable")
            p, w = p[order], w[order]
            # merge exact duplicates so comparisons see one atom per site
            fresh = np.concatenate(([True], np.diff(p) > 0))
            idx = np.cumsum(fresh) - 1
            merged_w = np.zeros(int(idx[-1]) + 1)
            np.add.at(merged_w, idx, w)
            self.positions = p[fresh]
            self.weights = merged_w / merged_w.sum()
            self.nodes = None
            self.cdf = None
        else:
            xs = np.asarray(nodes, dtype=float)
            F = np.asarray(cdf, dtype=float)
            if xs.ndim != 1 or xs.shape != F.shape or xs.size < 2:
                raise DomainError("density needs matching node and cdf arrays")
            if xs[0] != 0.0 or xs[-1] != 1.0 or np.any(np.diff(xs) <= 0):
                raise DomainError("cdf nodes must increase strictly from 0 to 1")
            if abs(F[0]) > _WEIGHT_TOL or abs(F[-1] - 1.0) > _WEIGHT_TOL \
                    or np.any(np.diff(F) < -1e-12):
                raise DomainError("cdf values must rise from 0 to 1 without decreasing")
            F = F.copy()
            F[0], F[-1] = 0.0, 1.0
            self.positions = None
            self.weights = None
            self.nodes = xs
            # flatten one-ulp dents so downstream interpolation stays monotone
            self.cdf = np.maximum.accumulate(np.clip(F, 0.0, 1.0))
        for arr in (self.positions, self.weights, self.nodes, self.cdf):
            if arr is not None:
                arr.setflags(write=False)

    # -- constructors -------------------------------------------------------

    @classmethod
    def from_atoms(cls, positions, weights=None) -> "FiberMeasure":
        return cls("atoms", positions=positions, weights=weights)

    @classmethod
    def uniform_atoms(cls, n: int) -> "FiberMeasure":
        if n < 1:
            raise DomainError("need at least one atom")
        return cls("atoms", positions=(np.arange(n) + 0.5) / n)

    @classmethod
    def lebesgue(cls) -> "FiberMeasure":
        return cls("density", nodes=[0.0, 1.0], cdf=[0.0, 1.0])

    @classmethod
    def from_cdf(cls, nodes, cdf) -> "FiberMeasure":
        return cls("density", nodes=nodes, cdf=cdf)

    # -- evaluation ---------------------------------------------------------

    def cdf_right(self, t):
        """Mass of [0, t], right-continuous in t, for t in [0, 1]."""
        t = np.asarray(t, dtype=float)
        if self.kind == "atoms":
            return np.cumsum(np.concatenate(([0.0], self.weights)))[
                np.searchsorted(self.positions, t, side="right")]
        return np.interp(t, self.nodes, self.cdf)

    def cdf_left(self, t):
        """Mass of [0, t), left limit of the distribution function."""
        t = np.asarray(t, dtype=float)
        if self.kind == "atoms":
            return np.cumsum(np.concatenate(([0.0], self.weights)))[
                np.searchsorted(self.positions, t, side="left")]
        return np.interp(t, self.nodes, self.cdf)

    def _inner_nodes(self) -> np.ndarray:
        pts = self.positions if self.kind == "atoms" else self.nodes
        return pts[(pts > 0.0) & (pts < 1.0)]

    # -- transformation -----------------------------------------------------

    def pushforward(self, f: CircleMap) -> "FiberMeasure":
        """Image measure under the circle map f."""
        if self.kind == "atoms":
            return FiberMeasure.from_atoms(f(self.positions), self.weights)
        base = f.inverse_lift(0.0)
        image_nodes = np.concatenate((f(self.nodes[:-1]), f(f.breakpoints)))
        image_nodes = np.unique(np.concatenate(([0.0], image_nodes[image_nodes < 1.0], [1.0])))
        pre = f.inverse_lift(image_nodes)
        G = self._cdf_lift(pre) - self._cdf_lift(base)
        G[0], G[-1] = 0.0, 1.0
        return FiberMeasure.from_cdf(image_nodes, np.clip(G, 0.0, 1.0))

    def _cdf_lift(self, t):
        t = np.asarray(t, dtype=float)
        k = np.floor(t)
        return np.interp(t - k, self.nodes, self.cdf) + k

    def __repr__(self) -> str:
        if self.kind == "atoms":
            return f"FiberMeasure(atoms={self.positions.size})"
        return f"FiberMeasure(density nodes={self.nodes.size})"


def sample_position(m: FiberMeasure, rng: np.random.Generator) -> float:
    """One random circle position distributed according to m."""
    if m.kind == "atoms":
        idx = int(rng.choice(m.positions.size, p=m.weights))
        return float(m.positions[idx])
    u = float(rng.uniform())
    i = int(np.searchsorted(m.cdf, u, side="left"))
    i = min(max(i, 1), m.cdf.size - 1)
    c0, c1 = m.cdf[i - 1], m.cdf[i]
    if c1 == c0:
        return float(m.nodes[i])
    return float(m.nodes[i - 1] + (u - c0) / (c1 - c0) * (m.nodes[i] - m.nodes[i - 1]))


def _level_median(lo: np.ndarray, hi: np.ndarray, length: np.ndarray) -> float:
    """Median of the mixture of uniforms on [lo_j, hi_j] with masses length_j."""
    cands = np.unique(np.concatenate((lo, hi)))
    flat = lo == hi
    span = np.where(flat, 1.0, hi - lo)

    def mass_upto(c):
        frac = np.where(flat, (c >= lo).astype(float),
                        np.clip((c - lo) / span, 0.0, 1.0))
        return float(frac @ length)

    masses = np.array([mass_upto(c) for c in cands])
    k = int(np.searchsorted(masses, 0.5))
    if k == 0:
        return float(cands[0])
    if k >= len(cands):
        return float(cands[-1])
    atom_at_k = float(length[flat & (lo == cands[k])].sum())
    below = masses[k] - atom_at_k
    if below >= 0.5 and masses[k - 1] < below:
        w = (0.5 - masses[k - 1]) / (below - masses[k - 1])
        return float(cands[k - 1] + w * (cands[k] - cands[k - 1]))
    return float(cands[k])


def transport_distance(m1: FiberMeasure, m2: FiberMeasure) -> float:
    """Circular 1-Wasserstein distance, exact for these measure classes.

    On each arc between consecutive support or node points the
    difference D of the two distribution functions is affine, so the
    optimal rotation offset is a mass median of D and the objective
    integrates in closed form.
    """
    pts = np.unique(np.concatenate(
        ([0.0, 1.0], m1._inner_nodes(), m2._inner_nodes())))
    a = np.asarray(m1.cdf_right(pts[:-1]) - m2.cdf_right(pts[:-1]))
    b = np.asarray(m1.cdf_left(pts[1:]) - m2.cdf_left(pts[1:]))
    length = np.diff(pts)
    use = length > 0
    a, b, length = a[use], b[use], length[use]
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    c = _level_median(lo, hi, length)
    flat = lo == hi
    mid = 0.5 * (lo + hi)
    span = np.where(flat, 1.0, hi - lo)
    inner = ((lo - c) ** 2 + (hi - c) ** 2) / (2.0 * span)
    mean_abs = np.where(c <= lo, mid - c,
                        np.where(c >= hi, c - mid,
                                 np.where(flat, np.abs(lo - c), inner)))
    return float(np.abs(mean_abs) @ length)
