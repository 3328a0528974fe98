"""Pure-Python tracing kernel.

Reference implementation of the hot loops; the compiled kernel in
``_fastcore.pyx`` mirrors this logic statement for statement.  Scalar math
uses the ``math`` module rather than numpy scalars, which is several times
faster and keeps the two backends' floating point behaviour close.
"""

from __future__ import annotations

import math

import numpy as np

from .params import (
    MODEL_COS,
    PLANE_TOL,
    STATUS_CAPTURED,
    STATUS_LOST_SURFACE,
    STATUS_STEP_LIMIT,
    SURFACE_TOL,
    TraceOutcome,
)

BACKEND = "python"

_TWO_PI = 2.0 * math.pi
_FOUR_PI2 = _TWO_PI * _TWO_PI


def _eval_cos(x, y, z):
    cx, cy, cz = math.cos(_TWO_PI * x), math.cos(_TWO_PI * y), math.cos(_TWO_PI * z)
    sx, sy, sz = math.sin(_TWO_PI * x), math.sin(_TWO_PI * y), math.sin(_TWO_PI * z)
    f = cx + cy + cz
    g = (-_TWO_PI * sx, -_TWO_PI * sy, -_TWO_PI * sz)
    h = (-_FOUR_PI2 * cx, -_FOUR_PI2 * cy, -_FOUR_PI2 * cz)
    return f, g, h


def _pwq_1d(u):
    u -= math.floor(u)
    if u <= 0.5:
        return 8.0 * (2.0 * u - 1.0) * u, 32.0 * u - 8.0, (32.0 if u > 0.0 else -32.0)
    return -8.0 * (2.0 * u - 1.0) * (u - 1.0), -32.0 * u + 24.0, -32.0


def _eval_pwq(x, y, z):
    fx, gx, hx = _pwq_1d(x)
    fy, gy, hy = _pwq_1d(y)
    fz, gz, hz = _pwq_1d(z)
    return fx + fy + fz, (gx, gy, gz), (hx, hy, hz)


def _evaluate(model_id, x, y, z):
    if model_id == MODEL_COS:
        return _eval_cos(x, y, z)
    return _eval_pwq(x, y, z)


def _project(model_id, c, hx, hy, hz, px, py, pz, x, y, z):
    """Pull a point back onto {f = c} within the plane through (px,py,pz).

    The plane constraint is linear so one exact projection fixes it; the
    surface residual is then removed by Newton steps along the in-plane
    gradient, which preserve the plane to roundoff.
    """
    t = (x - px) * hx + (y - py) * hy + (z - pz) * hz
    x -= t * hx
    y -= t * hy
    z -= t * hz
    for _ in range(12):
        f, g, _ = _evaluate(model_id, x, y, z)
        r = f - c
        if abs(r) < 1e-12:
            return True, x, y, z
        gd = g[0] * hx + g[1] * hy + g[2] * hz
        gx, gy, gz = g[0] - gd * hx, g[1] - gd * hy, g[2] - gd * hz
        g2 = gx * gx + gy * gy + gz * gz
        if g2 < 1e-16:
            return False, x, y, z
        s = r / g2
        x -= s * gx
        y -= s * gy
        z -= s * gz
    f, _, _ = _evaluate(model_id, x, y, z)
    return abs(f - c) < SURFACE_TOL, x, y, z


def trace_leaf(model_id, c, hhat, p0, x0, targets, step, capture_r, max_steps,
               arm_factor=1.2):
    """Follow the leaf field grad(f) x hhat from x0 until a target captures it.

    Targets are canonical positions in [0,1)^3; a capture happens at any of
    their integer translates that lies in the tracing plane, once the trace
    has armed that target by leaving its neighbourhood.  The returned path
    ends exactly on the captured lift.
    """
    hx, hy, hz = float(hhat[0]), float(hhat[1]), float(hhat[2])
    px, py, pz = float(p0[0]), float(p0[1]), float(p0[2])
    x, y, z = float(x0[0]), float(x0[1]), float(x0[2])
    tg = np.asarray(targets, dtype=float)
    ntg = len(tg)

    ok, x, y, z = _project(model_id, c, hx, hy, hz, px, py, pz, x, y, z)
    path = [(x, y, z)]
    if not ok:
        return TraceOutcome(STATUS_LOST_SURFACE, -1, np.zeros(3, dtype=int), 0, 0.0,
                            np.array(path))

    arm_r = arm_factor * capture_r
    armed = [False] * ntg
    for t in range(ntg):
        armed[t] = not _near_target(tg[t], x, y, z, px, py, pz, hx, hy, hz, arm_r)[0]

    h = step
    hmin = step / 64.0
    arclength = 0.0
    nsteps = 0
    status = STATUS_STEP_LIMIT
    hit_target = -1
    hit_shift = np.zeros(3, dtype=int)

    while nsteps < max_steps:
        f, g, _ = _evaluate(model_id, x, y, z)
        w0x = g[1] * hz - g[2] * hy
        w0y = g[2] * hx - g[0] * hz
        w0z = g[0] * hy - g[1] * hx
        n0 = math.sqrt(w0x * w0x + w0y * w0y + w0z * w0z)
        if n0 < 1e-12:
            status = STATUS_LOST_SURFACE
            break
        d0x, d0y, d0z = w0x / n0, w0y / n0, w0z / n0

        # midpoint direction, with step halving on sharp turns or |w| jumps
        while True:
            hh = 0.5 * h
            _, gm, _ = _evaluate(model_id, x + hh * d0x, y + hh * d0y, z + hh * d0z)
            wmx = gm[1] * hz - gm[2] * hy
            wmy = gm[2] * hx - gm[0] * hz
            wmz = gm[0] * hy - gm[1] * hx
            nm = math.sqrt(wmx * wmx + wmy * wmy + wmz * wmz)
            if nm > 1e-12:
                dmx, dmy, dmz = wmx / nm, wmy / nm, wmz / nm
                dev = math.sqrt((dmx - d0x) ** 2 + (dmy - d0y) ** 2 + (dmz - d0z) ** 2)
                if (dev <= 0.25 and abs(nm - n0) <= 0.2 * n0) or h <= hmin:
                    break
            elif h <= hmin:
                break
            h = max(hmin, 0.5 * h)
        if nm < 1e-12:
            status = STATUS_LOST_SURFACE
            break

        xn, yn, zn = x + h * dmx, y + h * dmy, z + h * dmz
        ok, xn, yn, zn = _project(model_id, c, hx, hy, hz, px, py, pz, xn, yn, zn)
        if not ok:
            status = STATUS_LOST_SURFACE
            break
        arclength += math.sqrt((xn - x) ** 2 + (yn - y) ** 2 + (zn - z) ** 2)
        x, y, z = xn, yn, zn
        path.append((x, y, z))
        nsteps += 1

        captured = False
        for t in range(ntg):
            near, d2, kx, ky, kz, onplane = _near_target(
                tg[t], x, y, z, px, py, pz, hx, hy, hz, arm_r
            )
            if not armed[t]:
                if not near:
                    armed[t] = True
            elif onplane and d2 < capture_r * capture_r:
                hit_target = t
                hit_shift = np.array([kx, ky, kz], dtype=int)
                path.append((tg[t][0] + kx, tg[t][1] + ky, tg[t][2] + kz))
                status = STATUS_CAPTURED
                captured = True
                break
        if captured:
            break
        h = min(step, 1.5 * h)

    return TraceOutcome(status, hit_target, hit_shift, nsteps, arclength,
                        np.array(path, dtype=float))


def _near_target(q, x, y, z, px, py, pz, hx, hy, hz, arm_r):
    kx = math.floor(x - q[0] + 0.5)
    ky = math.floor(y - q[1] + 0.5)
    kz = math.floor(z - q[2] + 0.5)
    vx, vy, vz = x - q[0] - kx, y - q[1] - ky, z - q[2] - kz
    d2 = vx * vx + vy * vy + vz * vz
    lift_h = (q[0] + kx - px) * hx + (q[1] + ky - py) * hy + (q[2] + kz - pz) * hz
    onplane = abs(lift_h) < PLANE_TOL
    near = onplane and d2 < arm_r * arm_r
    return near, d2, int(kx), int(ky), int(kz), onplane


def newton_critical_points(model_id, c, hhat, seeds_per_axis, iters=40, tol=1e-12):
    """Multi-start Newton on {grad f = mu * hhat, f = c} over a seed grid.

    Returns the converged points (not deduplicated) as an (m, 3) array of
    canonical representatives.
    """
    s = int(seeds_per_axis)
    ticks = (np.arange(s) + 0.5) / s
    gx, gy, gz = np.meshgrid(ticks, ticks, ticks, indexing="ij")
    pts = np.column_stack([gx.ravel(), gy.ravel(), gz.ravel()])
    n = len(pts)
    hh = np.asarray(hhat, dtype=float)

    f, g, hd = _evaluate_many(model_id, pts)
    mu = g @ hh
    state = np.column_stack([pts, mu])
    alive = np.ones(n, dtype=bool)
    converged = np.zeros(n, dtype=bool)

    for _ in range(iters):
        idx = np.where(alive)[0]
        if len(idx) == 0:
            break
        p = state[idx, :3]
        m = state[idx, 3]
        f, g, hd = _evaluate_many(model_id, p)
        res = np.empty((len(idx), 4))
        res[:, :3] = g - m[:, None] * hh[None, :]
        res[:, 3] = f - c
        jac = np.zeros((len(idx), 4, 4))
        jac[:, 0, 0] = hd[:, 0]
        jac[:, 1, 1] = hd[:, 1]
        jac[:, 2, 2] = hd[:, 2]
        jac[:, :3, 3] = -hh[None, :]
        jac[:, 3, :3] = g
        det = np.linalg.det(jac)
        bad = np.abs(det) < 1e-14
        jac[bad] = np.eye(4)
        step = np.linalg.solve(jac, res[..., None])[..., 0]
        step[bad] = 0.0
        state[idx] -= step
        move = np.max(np.abs(step), axis=1)
        done = (move < tol) & ~bad
        diverged = bad | (move > 1.0)
        converged[idx[done]] = True
        alive[idx[done | diverged]] = False

    out = state[converged, :3]
    out -= np.floor(out)
    return out


def _evaluate_many(model_id, pts):
    if model_id == MODEL_COS:
        ang = _TWO_PI * pts
        cs = np.cos(ang)
        sn = np.sin(ang)
        return cs.sum(axis=1), -_TWO_PI * sn, -_FOUR_PI2 * cs
    u = pts - np.floor(pts)
    lo = u <= 0.5
    f1 = np.where(lo, 8.0 * (2.0 * u - 1.0) * u, -8.0 * (2.0 * u - 1.0) * (u - 1.0))
    g1 = np.where(lo, 32.0 * u - 8.0, -32.0 * u + 24.0)
    h1 = np.where(lo & (u > 0.0), 32.0, -32.0)
    return f1.sum(axis=1), g1, h1
