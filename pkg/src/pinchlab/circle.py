"""Orientation-preserving circle homeomorphisms as piecewise-linear lifts.

A map is stored by its lift restricted to [0, 1): breakpoints (first one
pinned at 0) and lift values there. Composition and inversion are exact
on this class: the composite of two piecewise-linear lifts is again
piecewise linear once the breakpoint grids are merged, so repeated
cocycle products never leave the representation.
"""
from __future__ import annotations

import numpy as np

from .errors import DomainError

_SIMPLIFY_TOL = 1e-12
_AUTO_SIMPLIFY_AT = 4096


def circle_distance(a, b):
    """Arc distance on R/Z, vectorized."""
    d = np.mod(np.asarray(a, dtype=float) - np.asarray(b, dtype=float), 1.0)
    return np.minimum(d, 1.0 - d)


def _clean_nodes(xs: np.ndarray, vs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Drop duplicate breakpoints and roundoff-tied values.

    Keeps a node only when both coordinates strictly exceed the last
    kept node, which repairs one-ulp monotonicity dents left by
    interpolation without moving any surviving node.
    """
    keep = [0]
    for i in range(1, xs.size):
        j = keep[-1]
        if xs[i] > xs[j] and vs[i] > vs[j]:
            keep.append(i)
    # a trailing node at the seam duplicates node 0 shifted by one period
    while len(keep) > 1 and (xs[keep[-1]] >= 1.0 or vs[keep[-1]] >= vs[keep[0]] + 1.0):
        keep.pop()
    idx = np.asarray(keep)
    return xs[idx], vs[idx]


class CircleMap:
    """A circle homeomorphism of degree one with a piecewise-linear lift."""

    __slots__ = ("breakpoints", "values", "_slopes")

    def __init__(self, breakpoints, values) -> None:
        xs = np.ascontiguousarray(breakpoints, dtype=float)
        vs = np.ascontiguousarray(values, dtype=float)
        if xs.ndim != 1 or xs.shape != vs.shape or xs.size == 0:
            raise DomainError("breakpoints and values must be matching 1-d arrays")
        if xs[0] != 0.0:
            raise DomainError("first breakpoint must sit at 0")
        if xs[-1] >= 1.0 or np.any(np.diff(xs) <= 0):
            raise DomainError("breakpoints must increase strictly inside [0, 1)")
        if np.any(np.diff(vs) <= 0) or not vs[-1] < vs[0] + 1.0:
            raise DomainError("lift values must increase strictly over one period")
        if not np.isfinite(xs).all() or not np.isfinite(vs).all():
            raise DomainError("breakpoints and values must be finite")
        self.breakpoints = xs
        self.values = vs
        self._slopes = None
        xs.setflags(write=False)
        vs.setflags(write=False)

    # -- evaluation ---------------------------------------------------------

    def _nodes(self) -> tuple[np.ndarray, np.ndarray]:
        xs = np.append(self.breakpoints, 1.0)
        vs = np.append(self.values, self.values[0] + 1.0)
        return xs, vs

    def lift(self, t):
        """Value of the lift at real t (scalar or array)."""
        t = np.asarray(t, dtype=float)
        k = np.floor(t)
        xs, vs = self._nodes()
        out = np.interp(t - k, xs, vs) + k
        return float(out) if out.ndim == 0 else out

    def inverse_lift(self, y):
        """The t with lift(t) = y; inverse of `lift` on the reals."""
        y = np.asarray(y, dtype=float)
        k = np.floor(y - self.values[0])
        xs, vs = self._nodes()
        out = np.interp(y - k, vs, xs) + k
        return float(out) if out.ndim == 0 else out

    def __call__(self, t):
        """The circle map itself: lift mod 1."""
        return np.mod(self.lift(t), 1.0)

    def apply_inverse(self, t):
        return np.mod(self.inverse_lift(t), 1.0)

    def _segment_slope(self, i: int) -> float:
        # the last segment closes back to (1, values[0]+1); slopes() forms
        # that difference before adding 1, keeping an isometry's slope
        # exactly 1
        return float(self.slopes()[i])

    def arc_image(self, start: float, gap: float) -> float:
        """Length of the image of the arc [start, start+gap], gap in [0, 1).

        Walks the crossed segments, scaling the untouched remainder by
        each slope, so an arc inside one segment of an isometry keeps
        its length bit for bit and a contraction loses no relative
        precision to cancellation.
        """
        if not 0.0 <= gap < 1.0:
            raise DomainError("arc length must lie in [0, 1)")
        if gap == 0.0:
            return 0.0
        xs, vs = self.breakpoints, self.values
        n = len(xs)
        s = float(np.mod(start, 1.0))
        i = int(np.searchsorted(xs, s, side="right")) - 1
        if i < 0:
            i = n - 1
        room = (xs[i + 1] if i + 1 < n else 1.0) - s
        if gap <= room:
            return gap * self._segment_slope(i)
        total = room * self._segment_slope(i)
        rem = gap - room
        j = (i + 1) % n
        for _ in range(2 * n + 2):
            length = (xs[j + 1] if j + 1 < n else 1.0) - xs[j]
            if rem <= length:
                return total + rem * self._segment_slope(j)
            total += (vs[j + 1] - vs[j]) if j + 1 < n else (vs[0] - vs[-1]) + 1.0
            rem -= length
            j = (j + 1) % n
        return total + rem * self._segment_slope(j)

    # -- algebra ------------------------------------------------------------

    def compose(self, other: "CircleMap") -> "CircleMap":
        """self after other, exact on the merged breakpoint grid."""
        pulled = np.mod(other.inverse_lift(self.breakpoints), 1.0)
        xs = np.unique(np.concatenate((other.breakpoints, pulled)))
        xs = xs[xs < 1.0]
        if xs[0] != 0.0:
            xs = np.concatenate(([0.0], xs))
        vs = self.lift(other.lift(xs))
        xs, vs = _clean_nodes(xs, vs)
        out = CircleMap(xs, vs)
        if out.breakpoints.size > _AUTO_SIMPLIFY_AT:
            out = out.simplified()
        return out

    def invert(self) -> "CircleMap":
        """The inverse homeomorphism; reflects the lift graph exactly."""
        xs, vs = self._nodes()
        a = vs[:-1]
        b = xs[:-1]
        k = -np.floor(a)
        a, b = a + k, b + k
        order = np.argsort(a, kind="stable")
        a, b = a[order], b[order]
        a, b = _clean_nodes(a, b)
        if a[0] != 0.0:
            # interpolate the wrap segment (a[-1]-1, b[-1]-1) -> (a[0], b[0])
            slope = (b[0] - (b[-1] - 1.0)) / (a[0] - (a[-1] - 1.0))
            v0 = b[0] + slope * (0.0 - a[0])
            a = np.concatenate(([0.0], a))
            b = np.concatenate(([v0], b))
            a, b = _clean_nodes(a, b)
        return CircleMap(a, b)

    def rotated(self, c: float) -> "CircleMap":
        """Post-compose with the rotation by c, exact on the nodes.

        The breakpoints are untouched and the slope data is shared with
        this map, so slope-derived quantities of the result are bit
        identical to this map's: rotations are isometries.
        """
        vs = self.values + float(c)
        vs = vs - np.floor(vs[0])
        xs, vs = _clean_nodes(self.breakpoints, vs)
        out = CircleMap(xs, vs)
        if xs.size == self.breakpoints.size:
            out._slopes = self.slopes()
        return out

    def simplified(self, tol: float = _SIMPLIFY_TOL) -> "CircleMap":
        """Drop breakpoints that are collinear with their kept neighbour."""
        xs, vs = self._nodes()
        keep = [0]
        for i in range(1, len(xs) - 1):
            a = keep[-1]
            chord = vs[a] + (vs[i + 1] - vs[a]) * (xs[i] - xs[a]) / (xs[i + 1] - xs[a])
            if abs(vs[i] - chord) > tol:
                keep.append(i)
        idx = np.array(keep)
        return CircleMap(xs[idx], vs[idx])

    # -- geometry -----------------------------------------------------------

    def slopes(self) -> np.ndarray:
        if self._slopes is None:
            xs, vs = self.breakpoints, self.values
            last = ((vs[0] - vs[-1]) + 1.0) / (1.0 - xs[-1])
            self._slopes = np.append(np.diff(vs) / np.diff(xs), last)
            self._slopes.setflags(write=False)
        return self._slopes

    def max_slope(self) -> float:
        return float(self.slopes().max())

    def min_slope(self) -> float:
        return float(self.slopes().min())

    def __eq__(self, other) -> bool:
        if not isinstance(other, CircleMap):
            return NotImplemented
        return (np.array_equal(self.breakpoints, other.breakpoints)
                and np.array_equal(self.values, other.values))

    def __hash__(self) -> int:
        return hash((self.breakpoints.tobytes(), self.values.tobytes()))

    def __repr__(self) -> str:
        return f"CircleMap({self.breakpoints.size} nodes)"


# -- constructors -----------------------------------------------------------


def identity_map() -> CircleMap:
    return CircleMap([0.0], [0.0])


def rotation(angle: float) -> CircleMap:
    return CircleMap([0.0], [float(np.mod(angle, 1.0))])


def pwl_map(breakpoints, values) -> CircleMap:
    """Piecewise-linear map through the given lift nodes."""
    return CircleMap(breakpoints, values)


def mobius_map(matrix, grid: int = 1024) -> CircleMap:
    """Projective action of a 2x2 real matrix, sampled on a uniform grid.

    The circle is the projective line: parameter t stands for the line
    of angle pi*t. Requires positive determinant (orientation kept) and
    grid fine enough that every increment stays under a full turn.
    """
    M = np.asarray(matrix, dtype=float)
    if M.shape != (2, 2):
        raise DomainError("matrix must be 2x2")
    det = float(np.linalg.det(M))
    if det <= 0:
        raise DomainError("matrix must have positive determinant")
    M = M / np.sqrt(det)  # scaling does not change the projective action
    if grid < 16:
        raise DomainError("grid must have at least 16 cells")
    t = np.arange(grid) / grid
    theta = np.pi * t
    w = M @ np.vstack((np.cos(theta), np.sin(theta)))
    img = np.mod(np.arctan2(w[1], w[0]), np.pi) / np.pi
    steps = np.mod(np.diff(img), 1.0)
    if np.any(steps <= 0) or np.any(steps >= 1.0):
        raise DomainError("grid too coarse for this matrix")
    vs = img[0] + np.concatenate(([0.0], np.cumsum(steps)))
    xs, vs = _clean_nodes(t, vs)
    return CircleMap(xs, vs)


# -- comparison -------------------------------------------------------------


def sup_distance(f: CircleMap, g: CircleMap) -> float:
    """sup over the circle of the arc distance between f(t) and g(t).

    The lift difference is piecewise linear, so the supremum is reached
    at a breakpoint of either map unless a segment crosses a half
    integer, in which case it is exactly 1/2.
    """
    xs = np.unique(np.concatenate((f.breakpoints, g.breakpoints)))
    h = f.lift(xs) - g.lift(xs)
    best = float(np.max(np.abs(h - np.round(h))))
    hh = np.append(h, h[0])  # the difference is 1-periodic
    if np.any(np.floor(hh[1:] - 0.5) != np.floor(hh[:-1] - 0.5)):
        return 0.5
    return best


def holder_constant(f: CircleMap, beta: float = 1.0, grid: int = 1024) -> float:
    """Smallest C with d(f(p), f(q)) <= C d(p, q)^beta, estimated for beta < 1.

    For beta = 1 this is exactly the maximal slope. For beta < 1 the
    supremum is evaluated over all pairs drawn from the breakpoints plus
    a uniform refinement grid, which upper-bounds the true constant only
    up to grid resolution but is monotone under refinement.
    """
    if not 0.0 < beta <= 1.0:
        raise DomainError("beta must lie in (0, 1]")
    if beta == 1.0:
        return f.max_slope()
    if grid < 2:
        raise DomainError("grid must have at least 2 cells")
    pts = np.unique(np.concatenate((f.breakpoints, np.arange(grid) / grid)))
    img = f(pts)
    best = 0.0
    block = 256
    for lo in range(0, len(pts), block):
        p = pts[lo:lo + block, None]
        q = pts[None, :]
        dq = circle_distance(p, q)
        df = circle_distance(img[lo:lo + block, None], img[None, :])
        mask = dq > 0
        if np.any(mask):
            best = max(best, float(np.max(df[mask] / dq[mask] ** beta)))
    return best


def map_distance(f: CircleMap, g: CircleMap, beta: float = 1.0) -> tuple[float, float]:
    """Distance between maps as pairs (one-sided, symmetrized).

    The first component is the uniform distance plus the gap between the
    Hoelder constants; the second takes the larger of that quantity for
    (f, g) and for their inverses, the form used to compare cocycles.
    """
    d_one = sup_distance(f, g) + abs(holder_constant(f, beta) - holder_constant(g, beta))
    fi, gi = f.invert(), g.invert()
    d_inv = sup_distance(fi, gi) + abs(holder_constant(fi, beta) - holder_constant(gi, beta))
    return d_one, max(d_one, d_inv)


def max_distance(f: CircleMap, g: CircleMap, beta: float = 1.0) -> float:
    """Symmetrized map distance, the second component of map_distance."""
    return map_distance(f, g, beta)[1]


def lipschitz_constant(f: CircleMap) -> float:
    """Best Lipschitz bound for f as a map of arcs: its maximal slope."""
    return f.max_slope()


def max_arc_image(f: CircleMap, gap: float) -> float:
    """Largest image length of any arc of the given length under f.

    The image length is piecewise linear in the arc's start point with
    breaks only where either endpoint crosses a breakpoint of f, so the
    maximum over those candidate starts is exact.
    """
    if not 0.0 <= gap < 1.0:
        raise DomainError("arc length must lie in [0, 1)")
    if gap == 0.0:
        return 0.0
    starts = np.unique(np.mod(np.concatenate((f.breakpoints, f.breakpoints - gap)), 1.0))
    return max(f.arc_image(float(s), gap) for s in starts)


# -- fixed points -------------------------------------------------------------

_CLASSIFY_CAP = 1000


def _fixed_point_positions(f: CircleMap) -> tuple[list[float], bool]:
    xs, vs = f._nodes()
    phi = vs - xs
    positions: list[float] = []
    flat = False
    for i in range(len(xs) - 1):
        a, b = phi[i], phi[i + 1]
        if a == b:
            if abs(a - round(a)) < 1e-13:
                positions.append(float(xs[i]))
                flat = True
            continue
        lo, hi = (a, b) if a < b else (b, a)
        for k in range(int(np.ceil(lo - 1e-13)), int(np.floor(hi + 1e-13)) + 1):
            t = xs[i] + (k - a) * (xs[i + 1] - xs[i]) / (b - a)
            positions.append(float(np.mod(t, 1.0)))
    positions.sort()
    out: list[float] = []
    for p in positions:
        if not out or (circle_distance(p, out[-1]) > 1e-11 and circle_distance(p, out[0]) > 1e-11):
            out.append(p)
    return out, flat


def _side_escape(f: CircleMap, p: float, q: float, h: float) -> str:
    for _ in range(_CLASSIFY_CAP):
        d = float(circle_distance(q, p))
        if d >= 4.0 * h:
            return "out"
        if d <= h / 4.0:
            return "in"
        q = float(f(q))
    return "stuck"


def classify_fixed_points(f: CircleMap) -> list[tuple[float, str]]:
    """Fixed points of f with their local behaviour.

    Each fixed point is probed from both sides by iterating nearby seed
    points: a side counts as attracted once the orbit closes to a
    quarter of the probe offset and as escaping once it passes four
    offsets. Kinds: attracting, repelling, semi_stable, neutral.
    """
    positions, flat = _fixed_point_positions(f)
    if not positions:
        return []
    if flat and len(positions) == 1 and sup_distance(f, identity_map()) < 1e-13:
        raise DomainError("all points fixed")
    n = len(positions)
    out: list[tuple[float, str]] = []
    for i, p in enumerate(positions):
        gap_right = np.mod(positions[(i + 1) % n] - p, 1.0) if n > 1 else 1.0
        gap_left = np.mod(p - positions[(i - 1) % n], 1.0) if n > 1 else 1.0
        h_r = min(1e-4, gap_right / 8.0) or 1e-12
        h_l = min(1e-4, gap_left / 8.0) or 1e-12
        right = _side_escape(f, p, float(np.mod(p + h_r, 1.0)), h_r)
        left = _side_escape(f, p, float(np.mod(p - h_l, 1.0)), h_l)
        if right == "in" and left == "in":
            kind = "attracting"
        elif right == "out" and left == "out":
            kind = "repelling"
        elif {right, left} == {"in", "out"}:
            kind = "semi_stable"
        else:
            kind = "neutral"
        out.append((p, kind))
    return out
