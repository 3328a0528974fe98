# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled tracing kernel; mirrors pycore.py statement for statement."""

from libc.math cimport cos, sin, sqrt, floor, fabs
from libc.stdlib cimport free, malloc, realloc

cdef extern from *:
    """
    #include <math.h>
    #if defined(__GLIBC__)
    extern void sincos(double, double*, double*);
    #define ta_sincos sincos
    #else
    static void ta_sincos(double x, double* s, double* c) { *s = sin(x); *c = cos(x); }
    #endif
    """
    void ta_sincos(double x, double* s, double* c) nogil

import numpy as np

from .params import TraceOutcome

BACKEND = "c"

cdef double TWO_PI = 6.283185307179586
cdef double FOUR_PI2 = TWO_PI * TWO_PI
cdef double PLANE_TOL_C = 1e-6
cdef double SURFACE_TOL_C = 1e-9

cdef int MODEL_COS_C = 0
cdef int ST_CAPTURED = 0
cdef int ST_STEP_LIMIT = 1
cdef int ST_LOST_SURFACE = 2


cdef inline void _pwq_1d(double u, double* f, double* g, double* h) nogil:
    u -= floor(u)
    if u <= 0.5:
        f[0] = 8.0 * (2.0 * u - 1.0) * u
        g[0] = 32.0 * u - 8.0
        h[0] = 32.0 if u > 0.0 else -32.0
    else:
        f[0] = -8.0 * (2.0 * u - 1.0) * (u - 1.0)
        g[0] = -32.0 * u + 24.0
        h[0] = -32.0


cdef inline void _evaluate(int model_id, double x, double y, double z,
                           double* f, double* gx, double* gy, double* gz,
                           double* hx, double* hy, double* hz) nogil:
    cdef double cx, cy, cz, sx, sy, sz
    if model_id == MODEL_COS_C:
        ta_sincos(TWO_PI * x, &sx, &cx)
        ta_sincos(TWO_PI * y, &sy, &cy)
        ta_sincos(TWO_PI * z, &sz, &cz)
        f[0] = cx + cy + cz
        gx[0] = -TWO_PI * sx; gy[0] = -TWO_PI * sy; gz[0] = -TWO_PI * sz
        hx[0] = -FOUR_PI2 * cx; hy[0] = -FOUR_PI2 * cy; hz[0] = -FOUR_PI2 * cz
    else:
        _pwq_1d(x, &cx, gx, hx)
        _pwq_1d(y, &cy, gy, hy)
        _pwq_1d(z, &cz, gz, hz)
        f[0] = cx + cy + cz


cdef inline void _pwq_fg(double u, double* f, double* g) nogil:
    u -= floor(u)
    if u <= 0.5:
        f[0] = 8.0 * (2.0 * u - 1.0) * u
        g[0] = 32.0 * u - 8.0
    else:
        f[0] = -8.0 * (2.0 * u - 1.0) * (u - 1.0)
        g[0] = -32.0 * u + 24.0


cdef inline void _eval_fg(int model_id, double x, double y, double z,
                          double* f, double* gx, double* gy, double* gz) nogil:
    cdef double cx, cy, cz, sx, sy, sz
    if model_id == MODEL_COS_C:
        ta_sincos(TWO_PI * x, &sx, &cx)
        ta_sincos(TWO_PI * y, &sy, &cy)
        ta_sincos(TWO_PI * z, &sz, &cz)
        f[0] = cx + cy + cz
        gx[0] = -TWO_PI * sx; gy[0] = -TWO_PI * sy; gz[0] = -TWO_PI * sz
    else:
        _pwq_fg(x, &cx, gx)
        _pwq_fg(y, &cy, gy)
        _pwq_fg(z, &cz, gz)
        f[0] = cx + cy + cz


cdef inline bint _project(int model_id, double c,
                          double hhx, double hhy, double hhz,
                          double px, double py, double pz,
                          double* x, double* y, double* z) nogil:
    cdef double t, f, r, gx, gy, gz, gd, g2, s
    cdef int it
    t = (x[0] - px) * hhx + (y[0] - py) * hhy + (z[0] - pz) * hhz
    x[0] -= t * hhx
    y[0] -= t * hhy
    z[0] -= t * hhz
    for it in range(12):
        _eval_fg(model_id, x[0], y[0], z[0], &f, &gx, &gy, &gz)
        r = f - c
        if fabs(r) < 1e-12:
            return True
        gd = gx * hhx + gy * hhy + gz * hhz
        gx -= gd * hhx
        gy -= gd * hhy
        gz -= gd * hhz
        g2 = gx * gx + gy * gy + gz * gz
        if g2 < 1e-16:
            return False
        s = r / g2
        x[0] -= s * gx
        y[0] -= s * gy
        z[0] -= s * gz
    _eval_fg(model_id, x[0], y[0], z[0], &f, &gx, &gy, &gz)
    return fabs(f - c) < SURFACE_TOL_C


def trace_leaf(int model_id, double c, hhat, p0, x0, targets, double step,
               double capture_r, long max_steps, double arm_factor=1.2):
    cdef double hhx = hhat[0], hhy = hhat[1], hhz = hhat[2]
    cdef double px = p0[0], py = p0[1], pz = p0[2]
    cdef double x = x0[0], y = x0[1], z = x0[2]
    cdef double[:, ::1] tg = np.ascontiguousarray(targets, dtype=np.float64)
    cdef int ntg = tg.shape[0]
    cdef int t, i
    cdef long nsteps = 0
    cdef double arclength = 0.0
    cdef int status = ST_STEP_LIMIT
    cdef int hit_target = -1
    cdef long hkx = 0, hky = 0, hkz = 0

    # growable path buffer
    cdef long cap = 4096, npts = 0
    cdef double* buf = <double*> malloc(cap * 3 * sizeof(double))
    if buf == NULL:
        raise MemoryError()

    cdef bint ok = _project(model_id, c, hhx, hhy, hhz, px, py, pz, &x, &y, &z)
    buf[0] = x; buf[1] = y; buf[2] = z
    npts = 1
    if not ok:
        out = _finish(buf, npts, ST_LOST_SURFACE, -1, 0, 0, 0, 0, 0.0)
        return out

    cdef double arm_r = arm_factor * capture_r
    cdef char* armed = <char*> malloc(ntg * sizeof(char))
    if armed == NULL:
        free(buf)
        raise MemoryError()
    cdef double kx, ky, kz, vx, vy, vz, d2, lift_h
    cdef bint onplane, near
    for t in range(ntg):
        kx = floor(x - tg[t, 0] + 0.5)
        ky = floor(y - tg[t, 1] + 0.5)
        kz = floor(z - tg[t, 2] + 0.5)
        vx = x - tg[t, 0] - kx; vy = y - tg[t, 1] - ky; vz = z - tg[t, 2] - kz
        d2 = vx * vx + vy * vy + vz * vz
        lift_h = (tg[t, 0] + kx - px) * hhx + (tg[t, 1] + ky - py) * hhy + \
                 (tg[t, 2] + kz - pz) * hhz
        onplane = fabs(lift_h) < PLANE_TOL_C
        near = onplane and d2 < arm_r * arm_r
        armed[t] = 0 if near else 1

    cdef double h = step
    cdef double hmin = step / 64.0
    cdef double f, gx, gy, gz
    cdef double w0x, w0y, w0z, n0, d0x, d0y, d0z
    cdef double wmx, wmy, wmz, nm
    cdef double dmx = 0.0, dmy = 0.0, dmz = 0.0
    cdef double dev, hh
    cdef double xn, yn, zn
    cdef bint captured

    with nogil:
        while nsteps < max_steps:
            _eval_fg(model_id, x, y, z, &f, &gx, &gy, &gz)
            w0x = gy * hhz - gz * hhy
            w0y = gz * hhx - gx * hhz
            w0z = gx * hhy - gy * hhx
            n0 = sqrt(w0x * w0x + w0y * w0y + w0z * w0z)
            if n0 < 1e-12:
                status = ST_LOST_SURFACE
                break
            d0x = w0x / n0; d0y = w0y / n0; d0z = w0z / n0

            while True:
                hh = 0.5 * h
                _eval_fg(model_id, x + hh * d0x, y + hh * d0y, z + hh * d0z,
                         &f, &gx, &gy, &gz)
                wmx = gy * hhz - gz * hhy
                wmy = gz * hhx - gx * hhz
                wmz = gx * hhy - gy * hhx
                nm = sqrt(wmx * wmx + wmy * wmy + wmz * wmz)
                if nm > 1e-12:
                    dmx = wmx / nm; dmy = wmy / nm; dmz = wmz / nm
                    dev = sqrt((dmx - d0x) * (dmx - d0x) + (dmy - d0y) * (dmy - d0y)
                               + (dmz - d0z) * (dmz - d0z))
                    if (dev <= 0.25 and fabs(nm - n0) <= 0.2 * n0) or h <= hmin:
                        break
                elif h <= hmin:
                    break
                h = 0.5 * h
                if h < hmin:
                    h = hmin
            if nm < 1e-12:
                status = ST_LOST_SURFACE
                break

            xn = x + h * dmx; yn = y + h * dmy; zn = z + h * dmz
            if not _project(model_id, c, hhx, hhy, hhz, px, py, pz, &xn, &yn, &zn):
                status = ST_LOST_SURFACE
                break
            arclength += sqrt((xn - x) * (xn - x) + (yn - y) * (yn - y)
                              + (zn - z) * (zn - z))
            x = xn; y = yn; z = zn
            if npts == cap:
                with gil:
                    cap = cap * 2
                    buf = <double*> realloc(buf, cap * 3 * sizeof(double))
                    if buf == NULL:
                        free(armed)
                        raise MemoryError()
            buf[3 * npts] = x; buf[3 * npts + 1] = y; buf[3 * npts + 2] = z
            npts += 1
            nsteps += 1

            captured = False
            for t in range(ntg):
                kx = floor(x - tg[t, 0] + 0.5)
                ky = floor(y - tg[t, 1] + 0.5)
                kz = floor(z - tg[t, 2] + 0.5)
                vx = x - tg[t, 0] - kx
                vy = y - tg[t, 1] - ky
                vz = z - tg[t, 2] - kz
                d2 = vx * vx + vy * vy + vz * vz
                lift_h = (tg[t, 0] + kx - px) * hhx + (tg[t, 1] + ky - py) * hhy + \
                         (tg[t, 2] + kz - pz) * hhz
                onplane = fabs(lift_h) < PLANE_TOL_C
                near = onplane and d2 < arm_r * arm_r
                if armed[t] == 0:
                    if not near:
                        armed[t] = 1
                elif onplane and d2 < capture_r * capture_r:
                    hit_target = t
                    hkx = <long> kx; hky = <long> ky; hkz = <long> kz
                    with gil:
                        if npts == cap:
                            cap += 1
                            buf = <double*> realloc(buf, cap * 3 * sizeof(double))
                            if buf == NULL:
                                free(armed)
                                raise MemoryError()
                    buf[3 * npts] = tg[t, 0] + kx
                    buf[3 * npts + 1] = tg[t, 1] + ky
                    buf[3 * npts + 2] = tg[t, 2] + kz
                    npts += 1
                    status = ST_CAPTURED
                    captured = True
                    break
            if captured:
                break
            h = 1.5 * h
            if h > step:
                h = step

    free(armed)
    return _finish(buf, npts, status, hit_target, hkx, hky, hkz, nsteps, arclength)


cdef _finish(double* buf, long npts, int status, int hit_target,
             long hkx, long hky, long hkz, long nsteps, double arclength):
    path = np.empty((npts, 3), dtype=np.float64)
    cdef double[:, ::1] mv = path
    cdef long i
    for i in range(npts):
        mv[i, 0] = buf[3 * i]
        mv[i, 1] = buf[3 * i + 1]
        mv[i, 2] = buf[3 * i + 2]
    free(buf)
    return TraceOutcome(status, hit_target, np.array([hkx, hky, hkz], dtype=int),
                        nsteps, arclength, path)


def newton_critical_points(int model_id, double c, hhat, int seeds_per_axis,
                           int iters=40, double tol=1e-12):
    cdef double hhx = hhat[0], hhy = hhat[1], hhz = hhat[2]
    cdef int s = seeds_per_axis
    cdef int i, j, k, it, r, cidx, piv
    cdef double x, y, z, mu, f, gx, gy, gz, hdx, hdy, hdz
    cdef double move, amax, tmp
    cdef double[4][5] a  # augmented 4x4 system
    cdef double[4] dx
    cdef bint dead, conv

    out = np.empty((s * s * s, 3), dtype=np.float64)
    cdef double[:, ::1] om = out
    cdef long nout = 0

    with nogil:
        for i in range(s):
            for j in range(s):
                for k in range(s):
                    x = (i + 0.5) / s
                    y = (j + 0.5) / s
                    z = (k + 0.5) / s
                    _evaluate(model_id, x, y, z, &f, &gx, &gy, &gz, &hdx, &hdy, &hdz)
                    mu = gx * hhx + gy * hhy + gz * hhz
                    dead = False
                    conv = False
                    for it in range(iters):
                        _evaluate(model_id, x, y, z, &f, &gx, &gy, &gz,
                                  &hdx, &hdy, &hdz)
                        # residual
                        a[0][4] = gx - mu * hhx
                        a[1][4] = gy - mu * hhy
                        a[2][4] = gz - mu * hhz
                        a[3][4] = f - c
                        # jacobian
                        a[0][0] = hdx; a[0][1] = 0.0; a[0][2] = 0.0; a[0][3] = -hhx
                        a[1][0] = 0.0; a[1][1] = hdy; a[1][2] = 0.0; a[1][3] = -hhy
                        a[2][0] = 0.0; a[2][1] = 0.0; a[2][2] = hdz; a[2][3] = -hhz
                        a[3][0] = gx; a[3][1] = gy; a[3][2] = gz; a[3][3] = 0.0
                        # gaussian elimination with partial pivoting
                        for cidx in range(4):
                            piv = cidx
                            amax = fabs(a[cidx][cidx])
                            for r in range(cidx + 1, 4):
                                if fabs(a[r][cidx]) > amax:
                                    amax = fabs(a[r][cidx])
                                    piv = r
                            if amax < 1e-14:
                                dead = True
                                break
                            if piv != cidx:
                                for r in range(5):
                                    tmp = a[cidx][r]
                                    a[cidx][r] = a[piv][r]
                                    a[piv][r] = tmp
                            for r in range(cidx + 1, 4):
                                tmp = a[r][cidx] / a[cidx][cidx]
                                for piv in range(cidx, 5):
                                    a[r][piv] -= tmp * a[cidx][piv]
                        if dead:
                            break
                        for cidx in range(3, -1, -1):
                            tmp = a[cidx][4]
                            for r in range(cidx + 1, 4):
                                tmp -= a[cidx][r] * dx[r]
                            dx[cidx] = tmp / a[cidx][cidx]
                        x -= dx[0]; y -= dx[1]; z -= dx[2]; mu -= dx[3]
                        move = fabs(dx[0])
                        if fabs(dx[1]) > move: move = fabs(dx[1])
                        if fabs(dx[2]) > move: move = fabs(dx[2])
                        if fabs(dx[3]) > move: move = fabs(dx[3])
                        if move < tol:
                            conv = True
                            break
                        if move > 1.0:
                            break
                    if conv:
                        om[nout, 0] = x - floor(x)
                        om[nout, 1] = y - floor(y)
                        om[nout, 2] = z - floor(z)
                        nout += 1
    return out[:nout]
