"""Universal-cover and 3-torus arithmetic.

Canonical representatives, winding vectors of lifted paths, planar winding
numbers, rational directions with their chart coordinates, and integer
bases of the rank-2 lattices perpendicular to them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NotClosed, OnBoundary

WINDING_TOL = 1e-6


def canonical_rep(point):
    """Componentwise fractional part; the representative in [0,1)^3."""
    p = np.asarray(point, dtype=float)
    return p - np.floor(p)


def torus_distance(p, q) -> float:
    """Euclidean distance between the closest lifts of two cover points."""
    d = np.asarray(p, dtype=float) - np.asarray(q, dtype=float)
    d -= np.round(d)
    return float(np.linalg.norm(d))


@dataclass(frozen=True)
class RationalDirection:
    """A primitive integer direction with optional chart coordinates.

    The canonical sign makes the last nonzero component positive; for
    directions with positive third component the chart is (h1/h3, h2/h3),
    the affine coordinates on the plane z = 1.
    """

    h: tuple

    def __post_init__(self):
        h = tuple(int(v) for v in self.h)
        if h == (0, 0, 0):
            raise ValueError("zero direction")
        g = math.gcd(math.gcd(abs(h[0]), abs(h[1])), abs(h[2]))
        h = tuple(v // g for v in h)
        last = next(v for v in reversed(h) if v != 0)
        if last < 0:
            h = tuple(-v for v in h)
        object.__setattr__(self, "h", h)

    @classmethod
    def from_chart(cls, a: float, b: float, denominator: int = 1000) -> "RationalDirection":
        """Snap chart coordinates to the rational grid with the given denominator."""
        return cls((round(a * denominator), round(b * denominator), denominator))

    @property
    def chart(self):
        p, q, r = self.h
        if r <= 0:
            return None
        return (p / r, q / r)

    def as_array(self) -> np.ndarray:
        return np.array(self.h, dtype=float)

    def unit(self) -> np.ndarray:
        v = self.as_array()
        return v / np.linalg.norm(v)


@dataclass
class CoverPath:
    """An ordered polyline in the universal cover."""

    points: np.ndarray

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        if self.points.ndim != 2 or self.points.shape[1] != 3:
            raise ValueError("points must have shape (n, 3)")

    @property
    def closed_residual(self) -> float:
        d = self.points[-1] - self.points[0]
        return float(np.linalg.norm(d - np.round(d)))

    @property
    def arclength(self) -> float:
        seg = np.diff(self.points, axis=0)
        return float(np.sum(np.sqrt(np.sum(seg * seg, axis=1))))


def winding_vector(path) -> np.ndarray:
    """Homotopy class in the torus of a closed lifted path, as an integer triple.

    The path must close up modulo Z^3 within the winding tolerance; anything
    worse raises rather than silently rounding, since these integers label
    topology and must be unambiguous.
    """
    pts = path.points if isinstance(path, CoverPath) else np.asarray(path, dtype=float)
    d = pts[-1] - pts[0]
    w = np.round(d)
    if float(np.linalg.norm(d - w)) >= WINDING_TOL:
        raise NotClosed(f"endpoints differ by {d} (residual {np.linalg.norm(d - w):.3e})")
    return w.astype(int)


def planar_winding_number(polyline, center) -> int:
    """Signed winding of a closed 2-D polyline around a point, by angle accumulation."""
    pts = np.asarray(polyline, dtype=float)
    c = np.asarray(center, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("polyline must have shape (n, 2)")
    if float(np.linalg.norm(pts[-1] - pts[0])) > WINDING_TOL:
        pts = np.vstack([pts, pts[0]])
    v = pts - c
    if _min_segment_distance(v) <= 1e-9:
        raise OnBoundary("center lies on the polyline")
    a, b = v[:-1], v[1:]
    cross = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    dot = a[:, 0] * b[:, 0] + a[:, 1] * b[:, 1]
    total = float(np.sum(np.arctan2(cross, dot)))
    w = round(total / (2.0 * math.pi))
    return int(w)


def winding_numbers_many(polyline, centers) -> np.ndarray:
    """planar_winding_number for many centers at once (no boundary check).

    Returns 0 for centers closer than 1e-9 to a vertex of the polyline;
    callers that need the boundary distinction should use the scalar form.
    """
    pts = np.asarray(polyline, dtype=float)
    cs = np.atleast_2d(np.asarray(centers, dtype=float))
    if float(np.linalg.norm(pts[-1] - pts[0])) > WINDING_TOL:
        pts = np.vstack([pts, pts[0]])
    out = np.empty(len(cs), dtype=int)
    # chunk over centers to bound the (segments x centers) temporaries
    seg_a = pts[:-1]
    seg_b = pts[1:]
    for i, c in enumerate(cs):
        a = seg_a - c
        b = seg_b - c
        cross = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
        dot = a[:, 0] * b[:, 0] + a[:, 1] * b[:, 1]
        out[i] = round(float(np.sum(np.arctan2(cross, dot))) / (2.0 * math.pi))
    return out


def min_distance_to_polyline(polyline, center) -> float:
    pts = np.asarray(polyline, dtype=float)
    c = np.asarray(center, dtype=float)
    return _min_segment_distance(pts - c)


def _min_segment_distance(v) -> float:
    """Distance from the origin to the closest segment of the polyline v."""
    a, b = v[:-1], v[1:]
    d = b - a
    den = np.sum(d * d, axis=1)
    den[den == 0.0] = 1.0
    t = np.clip(-np.sum(a * d, axis=1) / den, 0.0, 1.0)
    proj = a + t[:, None] * d
    return float(np.sqrt(np.min(np.sum(proj * proj, axis=1))))


def perp_lattice_basis(direction: RationalDirection):
    """An integer basis (u, v) of the rank-2 lattice Z^3 intersect H-perp.

    Built from extended gcds so that u x v = H exactly, which certifies
    both perpendicularity and primitivity of the basis (the fundamental
    cell of the plane lattice has area |H|).
    """
    p, q, r = direction.h
    if q == 0 and r == 0:
        u, v = (0, 1, 0), (0, 0, 1)
    else:
        g = math.gcd(abs(q), abs(r))
        u = (0, r // g, -q // g)
        x, y = _bezout(q, r, g)
        v = (-g, x * p, y * p)
    uu, vv = np.array(u), np.array(v)
    h = np.array(direction.h)
    cr = np.cross(uu, vv)
    if np.array_equal(cr, -h):
        vv = -vv
        cr = -cr
    assert np.array_equal(cr, h), "basis construction lost primitivity"
    return tuple(int(c) for c in uu), tuple(int(c) for c in vv)


def _bezout(q: int, r: int, g: int):
    """x, y with q*x + r*y = g = gcd(q, r)."""
    old_r, rr = q, r
    old_s, s = 1, 0
    old_t, t = 0, 1
    while rr != 0:
        k = old_r // rr
        old_r, rr = rr, old_r - k * rr
        old_s, s = s, old_s - k * s
        old_t, t = t, old_t - k * t
    if old_r == -g:
        old_s, old_t = -old_s, -old_t
    return old_s, old_t


def plane_basis(direction: RationalDirection):
    """Right-handed orthonormal in-plane frame (e1, e2) with e1 x e2 = H / |H|."""
    u, v = perp_lattice_basis(direction)
    e1 = np.array(u, dtype=float)
    e1 /= np.linalg.norm(e1)
    e2 = np.array(v, dtype=float)
    e2 -= np.dot(e2, e1) * e1
    e2 /= np.linalg.norm(e2)
    hhat = direction.unit()
    if np.dot(np.cross(e1, e2), hhat) < 0.0:
        e2 = -e2
    return e1, e2
