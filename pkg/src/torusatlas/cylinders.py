"""Cylinders of closed orbits between opposite saddles.

Between two half-closed saddles the closed leaves sweep out a cylinder;
marching the section plane from one base until the orbit is captured by
another critical point identifies the opposite base together with its
integer deck translation, and the exact height follows from the two
lifts.  Zone boundaries are where a cylinder's height vanishes, and the
signed sum of cylinder heights is the averaged Euler characteristic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import LostSurface, NearSaddle, NoCylinder, StepLimit
from .models import EnergySlice, analytic_critical_points_cos0
from .tracing import (
    CriticalPoint,
    TraceConfig,
    TracedLoop,
    find_critical_points,
    trace_closed_orbit,
    trace_separatrix_loops,
)
from .torus import RationalDirection, plane_basis


@dataclass
class Cylinder:
    """A cylinder of closed orbits with its deck translation and height."""

    base: CriticalPoint
    opposite_index: int
    translation: tuple
    height: float
    sign: str
    side: int  # +1 / -1: direction of increasing <x, H> from the base
    n_planes: int


class _SideFailed(Exception):
    pass


def trace_cylinder(slice_: EnergySlice, direction: RationalDirection,
                   base: CriticalPoint, dh: float = 1e-3,
                   config: TraceConfig | None = None,
                   critical_points: list[CriticalPoint] | None = None) -> Cylinder:
    """March closed orbits away from a half-closed base saddle.

    Planes at normalized heights k*dh are seeded from the previous orbit's
    in-plane centroid; the march ends when an orbit is captured by a
    critical-point lift, which names the opposite base and its integer
    translation.  Both sides of the base plane are probed; the cylinder
    exists on exactly one of them.
    """
    config = config or TraceConfig()
    cps = critical_points if critical_points is not None else \
        find_critical_points(slice_, direction, config.seeds_per_axis,
                             config.newton_tol, strict=True)
    loops = trace_separatrix_loops(slice_, direction, base, cps, config)
    trivial = [lp for lp in loops if lp.trivial]
    if len(trivial) != 1:
        raise NoCylinder("base saddle is not half-closed")

    last_error = None
    for side in (1, -1):
        try:
            return _march_side(slice_, direction, base, cps, trivial[0], side,
                               dh, config)
        except _SideFailed as exc:
            last_error = exc
    raise NoCylinder(f"no closed-orbit family on either side of the base: {last_error}")


def _march_side(slice_, direction, base, cps, trivial_loop, side, dh, config):
    hhat = direction.unit()
    base_idx = next(i for i, cp in enumerate(cps) if cp is base)

    anchor = _safest_point(trivial_loop.path.points, cps)

    tau = 0.0
    probe = 10.0 * dh
    dh_cur = dh
    dh_min = dh / 4096.0
    dh_max = 32.0 * dh
    sign = "unknown"
    n_planes = 0
    max_planes = 200_000
    max_height = 16.0

    while n_planes < max_planes and abs(tau) < max_height:
        dtau = side * (probe if n_planes == 0 else dh_cur)
        seed = _continue_point(slice_, anchor, hhat, dtau)
        if seed is None:
            if n_planes == 0:
                raise _SideFailed("seed continuation left the surface")
            if dh_cur <= dh_min:
                raise _SideFailed("cylinder end not resolved (continuation)")
            dh_cur /= 8.0
            continue
        try:
            orbit = trace_closed_orbit(slice_, direction, seed, cps, config)
        except NearSaddle as hit:
            if hit.target_index == base_idx and all(s == 0 for s in hit.shift):
                if n_planes == 0 and probe < 40.0 * dh:
                    probe *= 2.0
                    continue
                raise _SideFailed("orbit trapped at the base saddle")
            arrival = cps[hit.target_index].position + np.array(hit.shift)
            h_raw = np.asarray(direction.h, dtype=float)
            height = abs(float(np.dot(arrival - base.position, h_raw))) / \
                float(np.linalg.norm(h_raw))
            return Cylinder(base, hit.target_index, hit.shift, height, sign,
                            side, n_planes + 1)
        except (StepLimit, LostSurface) as exc:
            if dh_cur <= dh_min or n_planes == 0:
                raise _SideFailed(f"orbit trace failed: {type(exc).__name__}")
            dh_cur /= 8.0
            continue
        if not orbit.trivial:
            # open leaf: past the end of the cylinder, or wrong side
            if n_planes == 0:
                raise _SideFailed("first plane carries no closed orbit")
            if dh_cur <= dh_min:
                raise _SideFailed("cylinder end not resolved")
            dh_cur /= 8.0
            continue
        if sign == "unknown":
            sign = orbit.sign
        anchor = _safest_point(orbit.path.points, cps)
        tau += dtau
        n_planes += 1
        near = _min_crit_distance(orbit.path.points, cps)
        if near < 8.0 * config.capture_radius:
            dh_cur = max(dh_min, dh_cur / 8.0)
        else:
            dh_cur = min(dh_max, dh_cur * 2.0)
    raise _SideFailed("cylinder march exceeded its budget")


def _safest_point(points, cps):
    """The orbit point farthest from every critical-point lift."""
    worst = np.full(len(points), np.inf)
    for cp in cps:
        d = points - cp.position
        d -= np.round(d)
        worst = np.minimum(worst, np.sum(d * d, axis=1))
    return points[int(np.argmax(worst))].copy()


def _continue_point(slice_, anchor, hhat, dtau):
    """Shift a surface point to the next plane and pull it back onto f = c.

    Newton along the in-plane gradient; the plane offset is preserved
    exactly.  Returns None when the correction diverges or stalls (the
    sheet ended between the planes).
    """
    x = anchor + dtau * hhat
    c = slice_.energy
    budget = 8.0 * abs(dtau) + 1e-6
    moved = 0.0
    for _ in range(30):
        f = float(slice_.model.value(x))
        r = f - c
        if abs(r) < 1e-11:
            return x
        g = slice_.model.gradient(x)
        g = g - float(np.dot(g, hhat)) * hhat
        g2 = float(np.dot(g, g))
        if g2 < 1e-16:
            return None
        step = (r / g2) * g
        moved += float(np.linalg.norm(step))
        if moved > budget:
            return None
        x = x - step
    return None


def _min_crit_distance(points, cps):
    best = np.inf
    for cp in cps:
        d = points - cp.position
        d -= np.round(d)
        best = min(best, float(np.min(np.sum(d * d, axis=1))))
    return float(np.sqrt(best))


def zone_boundary_residual(a: float, b: float, lmn, p1_fn=None, p4_fn=None) -> float:
    """<H, p1 - p4 - (l,m,n)> for H = (a, b, 1).

    Zeros of this residual over the chart square trace the candidate
    boundary arcs of the stability zones; inside a zone the value equals
    the height of the cylinder with deck translation (l,m,n), up to the
    normalization by |H|.  Defaults to the closed-form critical points of
    the cos model at energy zero.
    """
    if p1_fn is None or p4_fn is None:
        pts = analytic_critical_points_cos0(a, b)
        p1, p4 = pts[0], pts[3]
    else:
        p1, p4 = np.asarray(p1_fn(a, b), dtype=float), np.asarray(p4_fn(a, b), dtype=float)
    h = np.array([a, b, 1.0])
    return float(np.dot(h, p1 - p4 - np.asarray(lmn, dtype=float)))


def all_cylinders(slice_: EnergySlice, direction: RationalDirection,
                  dh: float = 1e-3, config: TraceConfig | None = None):
    """One cylinder per saddle (each of the two cylinders appears twice)."""
    config = config or TraceConfig()
    cps = find_critical_points(slice_, direction, config.seeds_per_axis,
                               config.newton_tol, strict=True)
    saddles = [cp for cp in cps if cp.kind == "saddle"]
    return [trace_cylinder(slice_, direction, s, dh, config, cps) for s in saddles]


def averaged_euler_characteristic(slice_: EnergySlice, direction: RationalDirection,
                                  dh: float = 1e-3,
                                  config: TraceConfig | None = None) -> float:
    """Signed sum of cylinder heights: electron cylinders minus hole cylinders.

    Each cylinder is hit twice (once from each base), hence the half.  The
    sign convention follows the loops on which the gradient points outward
    (electrons) counting positive; the sum vanishes at the symmetric energy
    zero and has the opposite sign of the energy nearby.
    """
    cyls = all_cylinders(slice_, direction, dh, config)
    total = 0.0
    for cyl in cyls:
        if cyl.sign == "electron":
            total += cyl.height
        elif cyl.sign == "hole":
            total -= cyl.height
        else:
            raise NoCylinder("cylinder with undetermined electron/hole sign")
    return 0.5 * total


def open_orbit_energy_interval(model, direction: RationalDirection,
                               tol: float = 0.01,
                               config: TraceConfig | None = None) -> float:
    """Half-width of the symmetric energy interval with open orbits.

    Bisection in the energy of "the direction still carries a label"; the
    interval is symmetric about zero for both test models, so only the
    upper endpoint is located.
    """
    from .labeling import classify_direction

    config = config or TraceConfig()
    lo, hi = 0.0, 1.0
    res = classify_direction(EnergySlice(model, lo), direction, config)
    if res.outcome != "labeled":
        return 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        res = classify_direction(EnergySlice(model, mid), direction, config)
        if res.outcome == "labeled":
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
