"""Critical points and leaf tracing for the plane foliation of an energy slice.

The foliation of the surface f = c by the planes <x, H> = const has, for
the two test models in their genus-3 energy window, exactly four critical
points, all saddles.  Leaves are traced in the universal cover with a
midpoint predictor and Newton reprojection onto {f = c} in the plane; a
trace terminates when it re-enters the capture radius of a known critical
point's in-plane lift.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import kernel
from .errors import (
    DegenerateDirection,
    LostSurface,
    NearSaddle,
    NotClosed,
    SaddleConnection,
    StepLimit,
    UnexpectedCount,
)
from .models import EnergySlice
from .torus import CoverPath, RationalDirection, plane_basis

DEDUP_TOL = 1e-6


@dataclass
class TraceConfig:
    """Numerical policy for critical-point finding and leaf tracing."""

    step: float = 1e-3
    capture_factor: float = 10.0
    offset: float = 1e-4
    step_cap: int = 2_000_000
    seeds_per_axis: int = 24
    newton_iters: int = 48
    newton_tol: float = 1e-12
    arm_factor: float = 1.2
    # failed traces are retried once with the step shrunk by this factor
    retry_shrink: float = 4.0
    max_retries: int = 1

    @property
    def capture_radius(self) -> float:
        return self.capture_factor * self.step


@dataclass
class CriticalPoint:
    """A tangency point of the foliation planes with the surface."""

    position: np.ndarray
    kind: str  # "saddle" | "extremum"
    separatrix_dirs: np.ndarray | None  # (2, 3) outgoing unit vectors, saddles only
    grad_sign: int

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)


@dataclass
class TracedLoop:
    """A closed leaf (or separatrix loop) lifted to the cover."""

    path: CoverPath
    start: object
    winding: np.ndarray
    sign: str = "unknown"  # "electron" | "hole" | "unknown"
    arclength: float = 0.0
    capture_distance: float = float("nan")

    @property
    def trivial(self) -> bool:
        return bool(np.all(self.winding == 0))


def find_critical_points(slice_: EnergySlice, direction: RationalDirection,
                         seeds_per_axis: int = 24, tol: float = 1e-12,
                         strict: bool = False) -> list[CriticalPoint]:
    """All solutions of {f = c, grad f parallel to H} in [0,1)^3, classified.

    Multi-start Newton from a uniform seed grid (at least 16 per axis),
    deduplicated modulo Z^3.  A point is a saddle when the in-plane Hessian
    of f is indefinite, i.e. the linearized leaf field has real eigenvalues
    of opposite sign.
    """
    if seeds_per_axis < 16:
        raise ValueError("seeds_per_axis must be at least 16")
    model = slice_.model
    if model.tag == "cos" and abs(slice_.energy) < 1e-12 and \
            tuple(abs(v) for v in direction.h) == (1, 1, 1):
        raise DegenerateDirection("flat critical points for the diagonal direction at E=0")

    hhat = direction.unit()
    raw = kernel.newton_critical_points(model.model_id, slice_.energy, hhat,
                                        seeds_per_axis, iters=48, tol=tol)
    pts = _dedupe_mod1(raw)

    # residual filter: on the surface and gradient within 1e-9 of parallel
    keep = []
    for p in pts:
        f = float(model.value(p))
        g = model.gradient(p)
        gn = float(np.linalg.norm(g))
        if abs(f - slice_.energy) > 1e-10 or gn < 1e-9:
            continue
        if float(np.linalg.norm(np.cross(g, hhat))) / gn > 1e-9:
            continue
        keep.append(p)

    e1, e2 = plane_basis(direction)
    out = []
    for p in keep:
        hd = model.hessian_diag(p)
        q11 = float(np.dot(e1 * hd, e1))
        q12 = float(np.dot(e1 * hd, e2))
        q22 = float(np.dot(e2 * hd, e2))
        det = q11 * q22 - q12 * q12
        grad_sign = 1 if float(np.dot(model.gradient(p), hhat)) > 0 else -1
        if det < 0.0:
            dirs = _unstable_rays(np.array([[q11, q12], [q12, q22]]), e1, e2)
            out.append(CriticalPoint(p, "saddle", dirs, grad_sign))
        else:
            out.append(CriticalPoint(p, "extremum", None, grad_sign))

    out.sort(key=lambda cp: tuple(cp.position))
    if strict and len(out) != 4:
        raise UnexpectedCount(f"expected 4 critical points, found {len(out)}")
    return out


def _dedupe_mod1(pts: np.ndarray) -> np.ndarray:
    if len(pts) == 0:
        return pts.reshape(0, 3)
    order = np.lexsort((pts[:, 2], pts[:, 1], pts[:, 0]))
    reps: list[np.ndarray] = []
    for p in pts[order]:
        dup = False
        for r in reps:
            d = p - r
            d -= np.round(d)
            if float(np.linalg.norm(d)) < DEDUP_TOL:
                dup = True
                break
        if not dup:
            reps.append(p)
    return np.array(reps)


def _unstable_rays(q: np.ndarray, e1: np.ndarray, e2: np.ndarray) -> np.ndarray:
    """Outgoing separatrix directions of the in-plane leaf field at a saddle.

    The leaf field linearizes to J Q (J the quarter turn); its eigenvectors
    are the null directions of the quadratic form Q, and the unstable one
    carries both outgoing rays.
    """
    evals, evecs = np.linalg.eigh(q)
    lam_min, lam_max = evals
    u_min, u_max = evecs[:, 0], evecs[:, 1]
    # null directions of the cone Q(v) = 0
    va = np.sqrt(-lam_min) * u_max + np.sqrt(lam_max) * u_min
    vb = np.sqrt(-lam_min) * u_max - np.sqrt(lam_max) * u_min
    # leaf field linearization: in (e1, e2) coordinates with e1 x e2 = hhat,
    # w = grad f x hhat reads as the -90 degree rotation of the gradient
    jq = np.array([[q[1, 0], q[1, 1]], [-q[0, 0], -q[0, 1]]])
    picked = None
    for v in (va, vb):
        v = v / np.linalg.norm(v)
        mu = float(np.dot(jq @ v, v))
        if mu > 0.0:
            picked = v
            break
    if picked is None:  # roundoff tie; fall back to the larger Rayleigh quotient
        picked = max((va, vb), key=lambda v: np.dot(jq @ v, v) / np.dot(v, v))
        picked = picked / np.linalg.norm(picked)
    if picked[0] < 0 or (picked[0] == 0 and picked[1] < 0):
        picked = -picked
    d3 = picked[0] * e1 + picked[1] * e2
    return np.stack([d3, -d3])


def _run_trace(slice_, direction, p0, x0, targets, config):
    hhat = direction.unit()
    return kernel.trace_leaf(slice_.model.model_id, slice_.energy, hhat, p0, x0,
                             np.asarray(targets, dtype=float), config.step,
                             config.capture_radius, config.step_cap,
                             config.arm_factor)


def trace_separatrix_loops(slice_: EnergySlice, direction: RationalDirection,
                           saddle: CriticalPoint,
                           critical_points: list[CriticalPoint] | None = None,
                           config: TraceConfig | None = None):
    """The two loops of the figure-eight leaf through a saddle.

    Each outgoing separatrix ray is offset by a small delta and integrated
    until the trace re-enters the capture radius of an in-plane lift of the
    starting saddle; the closing lift is appended exactly, so the winding
    vector of each loop is an exact integer triple.

    Raises SaddleConnection if a trace is captured by a different critical
    point first (the direction sits on a sub-zone boundary), StepLimit and
    LostSurface for numerical failures.
    """
    if saddle.kind != "saddle":
        raise ValueError("separatrix tracing requires a saddle")
    config = config or TraceConfig()
    cps = critical_points if critical_points is not None else [saddle]
    targets = np.array([cp.position for cp in cps])
    self_idx = _index_of(cps, saddle)

    loops = []
    for ray in saddle.separatrix_dirs:
        loop = _trace_one_separatrix(slice_, direction, saddle, ray, targets,
                                     self_idx, config)
        loops.append(loop)
    return loops[0], loops[1]


def _trace_one_separatrix(slice_, direction, saddle, ray, targets, self_idx, config):
    cfg = config
    last_err = None
    for attempt in range(config.max_retries + 1):
        x0 = saddle.position + config.offset * ray
        out = _run_trace(slice_, direction, saddle.position, x0, targets, cfg)
        if out.status == kernel.STATUS_CAPTURED:
            if out.hit_target != self_idx:
                raise SaddleConnection(out.hit_target, out.hit_shift)
            path = np.vstack([saddle.position, out.path])
            winding = out.hit_shift.copy()
            capdist = float(np.linalg.norm(out.path[-1] - out.path[-2])) if len(out.path) > 1 else 0.0
            return TracedLoop(CoverPath(path), saddle, winding,
                              arclength=out.arclength, capture_distance=capdist)
        last_err = out.status
        cfg = replace(cfg, step=cfg.step / cfg.retry_shrink)
    if last_err == kernel.STATUS_STEP_LIMIT:
        raise StepLimit(f"separatrix trace exceeded {config.step_cap} steps")
    raise LostSurface("separatrix trace lost the surface")


def trace_closed_orbit(slice_: EnergySlice, direction: RationalDirection, seed,
                       critical_points: list[CriticalPoint] | None = None,
                       config: TraceConfig | None = None) -> TracedLoop:
    """The closed leaf through a regular seed point, lifted to the cover.

    Raises NearSaddle when the trace (or the seed itself) falls within the
    capture radius of a critical-point lift in the seed's plane; callers use
    this as the endpoint test when marching along a cylinder.
    """
    config = config or TraceConfig()
    cps = critical_points or []
    seed = np.asarray(seed, dtype=float)

    for cp in cps:
        d = seed - cp.position
        k = np.round(d)
        if float(np.linalg.norm(d - k)) < config.capture_radius and \
                abs(float(np.dot(cp.position + k - seed, direction.unit()))) < kernel.PLANE_TOL:
            raise NearSaddle(_index_of(cps, cp), k.astype(int), seed)

    targets = np.array([cp.position for cp in cps] + [seed])
    self_idx = len(targets) - 1
    out = _run_trace(slice_, direction, seed, seed, targets, config)
    if out.status == kernel.STATUS_CAPTURED:
        if out.hit_target != self_idx:
            raise NearSaddle(out.hit_target, out.hit_shift, out.path[-1])
        loop = TracedLoop(CoverPath(out.path), seed, out.hit_shift.copy(),
                          arclength=out.arclength)
        loop.sign = orbit_sign(slice_, direction, loop)
        return loop
    if out.status == kernel.STATUS_STEP_LIMIT:
        raise StepLimit(f"orbit trace exceeded {config.step_cap} steps")
    raise LostSurface("orbit trace lost the surface")


def orbit_sign(slice_: EnergySlice, direction: RationalDirection,
               loop: TracedLoop) -> str:
    """Electron/hole sign of a closed leaf.

    The level value just inside the loop (within its plane) decides the
    sign: below the slice energy means the loop encloses lower values
    (an electron orbit), above means higher (a hole orbit).
    """
    pts = loop.path.points
    e1, e2 = plane_basis(direction)
    origin = pts[0]
    uv = np.column_stack([(pts - origin) @ e1, (pts - origin) @ e2])
    centroid = uv.mean(axis=0)
    far = int(np.argmax(np.sum((uv - centroid) ** 2, axis=1)))
    inward = centroid - uv[far]
    nrm = float(np.linalg.norm(inward))
    if nrm < 1e-12:
        return "unknown"
    inward /= nrm
    eps = min(0.25 * nrm, 5.0 * max(1e-4, _loop_step_scale(pts)))
    probe2 = uv[far] + eps * inward
    from .torus import planar_winding_number
    from .errors import OnBoundary
    try:
        if planar_winding_number(uv, probe2) == 0:
            probe2 = centroid
            if planar_winding_number(uv, probe2) == 0:
                return "unknown"
    except OnBoundary:
        return "unknown"
    probe3 = origin + probe2[0] * e1 + probe2[1] * e2
    val = float(slice_.model.value(probe3))
    if val < slice_.energy:
        return "electron"
    if val > slice_.energy:
        return "hole"
    return "unknown"


def _loop_step_scale(pts: np.ndarray) -> float:
    if len(pts) < 2:
        return 1e-3
    seg = np.diff(pts[: min(len(pts), 64)], axis=0)
    return float(np.median(np.sqrt(np.sum(seg * seg, axis=1))))


def _index_of(cps, cp) -> int:
    for i, other in enumerate(cps):
        if other is cp:
            return i
    # fall back to positional identity
    for i, other in enumerate(cps):
        if np.allclose(other.position, cp.position):
            return i
    raise ValueError("critical point not in list")
