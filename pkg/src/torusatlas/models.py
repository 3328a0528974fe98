"""The two 3-periodic test functions and their closed-form critical points.

Both functions are separable sums g(x)+g(y)+g(z) of a 1-periodic profile,
have critical values {-3,-1,1,3}, and their level sets for energies in
(-1,1) are genus-3 surfaces spanning all three axis directions of the
torus.  Everything downstream (tracing, labeling, sweeps) only uses the
small interface defined here: value / gradient / diagonal Hessian, plus
per-axis metadata for the handle scaffold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateDirection

TWO_PI = 2.0 * math.pi

# integer ids used by the tracing kernels
MODEL_IDS = {"cos": 0, "pwq": 1}


@dataclass(frozen=True)
class FermiModel:
    """A 3-periodic scalar function with analytic derivatives."""

    tag: str
    critical_values: tuple = (-3.0, -1.0, 1.0, 3.0)
    genus_window: tuple = (-1.0, 1.0)

    @property
    def model_id(self) -> int:
        return MODEL_IDS[self.tag]

    # subclasses implement the separable profile g and derivatives
    def _g(self, u):
        raise NotImplementedError

    def _dg(self, u):
        raise NotImplementedError

    def _ddg(self, u):
        raise NotImplementedError

    def value(self, pts):
        """f at points of shape (..., 3); periodic in each coordinate."""
        pts = np.asarray(pts, dtype=float)
        return self._g(pts[..., 0]) + self._g(pts[..., 1]) + self._g(pts[..., 2])

    def gradient(self, pts):
        pts = np.asarray(pts, dtype=float)
        return np.stack(
            [self._dg(pts[..., 0]), self._dg(pts[..., 1]), self._dg(pts[..., 2])], axis=-1
        )

    def hessian_diag(self, pts):
        """The Hessian is diagonal for separable f; returns its diagonal."""
        pts = np.asarray(pts, dtype=float)
        return np.stack(
            [self._ddg(pts[..., 0]), self._ddg(pts[..., 1]), self._ddg(pts[..., 2])], axis=-1
        )

    def profile(self, u):
        """The 1-periodic separable profile g with f = g(x)+g(y)+g(z)."""
        return self._g(np.asarray(u, dtype=float))

    def axis_line_min(self, offsets) -> float:
        """Exact minimum of f along an axis-parallel line at given cross offsets.

        Valid because f is separable and min g = -1 for both models.
        """
        o1, o2 = offsets
        return -1.0 + float(self._g(np.float64(o1)) + self._g(np.float64(o2)))


class _CosModel(FermiModel):
    """f(x,y,z) = cos(2 pi x) + cos(2 pi y) + cos(2 pi z)."""

    def _g(self, u):
        return np.cos(TWO_PI * u)

    def _dg(self, u):
        return -TWO_PI * np.sin(TWO_PI * u)

    def _ddg(self, u):
        return -TWO_PI * TWO_PI * np.cos(TWO_PI * u)


class _PwqModel(FermiModel):
    """Piecewise quadratic profile, C^1, odd, 1-periodic.

    g(u) = 8(2u-1)u on [0, 1/2] and -8(2u-1)(u-1) on [1/2, 1], applied to
    the fractional part.  The two parabola pieces join with matching value
    and slope at 0 and 1/2, so f is C^1 everywhere; the second derivative
    jumps between +32 and -32 across those planes.
    """

    def _g(self, u):
        u = np.asarray(u, dtype=float) % 1.0
        lo = u <= 0.5
        return np.where(lo, 8.0 * (2.0 * u - 1.0) * u, -8.0 * (2.0 * u - 1.0) * (u - 1.0))

    def _dg(self, u):
        u = np.asarray(u, dtype=float) % 1.0
        return np.where(u <= 0.5, 32.0 * u - 8.0, -32.0 * u + 24.0)

    def _ddg(self, u):
        # the left-piece value is used on the crease set by convention
        u = np.asarray(u, dtype=float) % 1.0
        return np.where((u > 0.0) & (u <= 0.5), 32.0, -32.0)


_MODELS = {"cos": _CosModel("cos"), "pwq": _PwqModel("pwq")}


def get_model(tag: str) -> FermiModel:
    try:
        return _MODELS[tag]
    except KeyError:
        raise KeyError(f"unknown model tag {tag!r}; available: {sorted(_MODELS)}") from None


@dataclass(frozen=True)
class EnergySlice:
    """A level surface f = energy, viewed in the 3-torus."""

    model: FermiModel
    energy: float

    def __post_init__(self):
        for cv in self.model.critical_values:
            if abs(self.energy - cv) < 1e-12:
                raise ValueError(f"energy {self.energy} is a critical value of {self.model.tag}")

    @property
    def in_genus_window(self) -> bool:
        lo, hi = self.model.genus_window
        return lo < self.energy < hi


def evaluate_with_gradient(model: FermiModel, point):
    """(f, grad f) at a single cover point; reduction mod 1 is implicit."""
    p = np.asarray(point, dtype=float)
    return float(model.value(p)), model.gradient(p)


# ---------------------------------------------------------------------------
# closed-form critical points
# ---------------------------------------------------------------------------

def alpha_cos0(a: float, b: float) -> float:
    """The common sine amplitude at the E=0 critical points of the cos model.

    At a critical point of the plane foliation with direction (a, b, 1) the
    three sines are proportional to (a, b, 1); alpha is the z-sine.
    """
    a2, b2 = a * a, b * b
    den = a2 * a2 + b2 * b2 + 1.0 - 2.0 * a2 * b2 - 2.0 * a2 - 2.0 * b2
    if abs(den) < 1e-12:
        raise DegenerateDirection(f"amplitude formula degenerates at (a,b)=({a},{b})")
    num = 2.0 * math.sqrt(a2 * a2 + b2 * b2 + 1.0 - a2 * b2 - a2 - b2) - (a2 + b2 + 1.0)
    r = num / den
    if r > 1.0:
        if r > 1.0 + 1e-7:
            raise DegenerateDirection(f"amplitude^2 = {r} out of range at (a,b)=({a},{b})")
        r = 1.0
    if r < 0.0:
        raise DegenerateDirection(f"amplitude^2 = {r} out of range at (a,b)=({a},{b})")
    return math.sqrt(r)


def analytic_critical_points_cos0(a: float, b: float):
    """The four foliation critical points of the cos model at energy 0.

    Each coordinate of the first point is one of {theta, 1/2 - theta} with
    theta = asin(component amplitude) / 2 pi; the branch triple is resolved
    by requiring f = 0, trying first the combination that matches the
    symmetric structure of the surface.  The other three points are the
    images of the first under the two point symmetries of the level set.

    Returns a (4, 3) array (p1, p2, p3, p4).
    """
    if not (0.0 <= a <= 1.0 and 0.0 <= b <= 1.0):
        raise ValueError("chart coordinates must lie in [0,1]")
    al = alpha_cos0(a, b)
    sa = min(a * al, 1.0)
    sb = min(b * al, 1.0)
    theta = np.array([math.asin(sa), math.asin(sb), math.asin(al)]) / TWO_PI

    preferred = (0, 1, 1) if a <= b else (0, 1, 0)
    combos = [preferred] + [
        (i, j, k)
        for i in (0, 1)
        for j in (0, 1)
        for k in (0, 1)
        if (i, j, k) != preferred
    ]
    cosines = np.array([math.sqrt(max(0.0, 1.0 - sa * sa)),
                        math.sqrt(max(0.0, 1.0 - sb * sb)),
                        math.sqrt(max(0.0, 1.0 - al * al))])
    p1 = None
    for combo in combos:
        signs = np.where(np.array(combo) == 0, 1.0, -1.0)
        if abs(float(np.sum(signs * cosines))) < 1e-9:
            p1 = np.where(np.array(combo) == 0, theta, 0.5 - theta)
            break
    if p1 is None:
        raise DegenerateDirection(f"no sign branch closes f=0 at (a,b)=({a},{b})")
    half = np.full(3, 0.5)
    return np.stack([p1, half - p1, half + p1, 1.0 - p1])


def analytic_critical_points_pwq(a: float, b: float, energy: float):
    """Printed-form critical points of the piecewise quadratic model.

    Evaluates the published case formulas verbatim and reports, alongside
    the four points, the residual r = max_i |f(p_i) - energy|.  Direct
    substitution shows the formulas generally do not satisfy f = energy,
    so callers must treat a large residual as "formula disagrees with the
    surface" and fall back to the numerical solver.

    Returns (points (4,3), residual).
    """
    if not (-1.0 <= energy <= 0.0):
        raise ValueError("printed formulas cover energies in [-1, 0]")
    if not (0.0 <= a <= 1.0 and 0.0 <= b <= 1.0):
        raise ValueError("chart coordinates must lie in [0,1]")
    E = energy
    d1 = 1.0 - a * a + b * b
    d2 = 1.0 + a * a - b * b
    if d1 <= 0.0 or d2 <= 0.0:
        raise DegenerateDirection("square-root argument vanishes")
    r1 = math.sqrt(d1)
    r2 = math.sqrt(d2)
    sp = math.sqrt(1.0 + E)
    sm = math.sqrt(1.0 - E)

    if b * b - a * a >= E:
        x1 = a * sp / (4.0 * r1)
        y1 = 0.5 - b * sp / (4.0 * r1)
        z1 = 0.5 - sp / (4.0 * r1)
    else:
        x1 = a * sm / (4.0 * r2)
        y1 = 0.5 - b * sm / (4.0 * r2)
        z1 = 0.5 - sm / (4.0 * r2)
    if a * a - b * b <= E:
        x2 = 0.5 - a * sm / (4.0 * r1)
        y2 = b * sm / (4.0 * r1)
        z2 = sm / (4.0 * r1)
    else:
        x2 = 0.5 - a * sp / (4.0 * r2)
        y2 = b * sp / (4.0 * r2)
        z2 = 0.5 - sp / (4.0 * r2)

    p1 = np.array([x1, y1, z1])
    p2 = np.array([x2, y2, z2])
    pts = np.stack([p1, p2, 1.0 - p2, 1.0 - p1])
    model = get_model("pwq")
    residual = float(np.max(np.abs(model.value(pts) - E)))
    return pts, residual
