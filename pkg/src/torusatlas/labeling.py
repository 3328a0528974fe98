"""Saddle classification and homology labeling of a direction.

A direction is labeled when all four foliation saddles are half-closed
(exactly one loop of each figure-eight is null-homotopic in the torus).
The label of the trivial loop is read off by linking it with three
families of axis-parallel scaffold lines chosen on the positive side of
the surface, one family per handle; the triple of linking numbers, sign
normalized, is the Miller index of the stability zone.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CoreOnLoop,
    DegenerateDirection,
    LostSurface,
    NoCore,
    SaddleConnection,
    StepLimit,
    UnexpectedCount,
)
from .models import EnergySlice
from .torus import RationalDirection, min_distance_to_polyline, winding_numbers_many
from .tracing import CriticalPoint, TraceConfig, TracedLoop, find_critical_points, \
    trace_separatrix_loops

# cyclic projection planes: axis i drops to the coordinate pair CYCLE[i]
CYCLE = ((1, 2), (2, 0), (0, 1))


class SaddleClass(enum.Enum):
    FULLY_OPEN = "fully-open"
    HALF_CLOSED = "half-closed"
    FULLY_CLOSED = "fully-closed"


def classify_saddle(loops) -> SaddleClass:
    """Saddle taxonomy from the winding vectors of its two loops."""
    trivial = sum(1 for lp in loops if lp.trivial)
    if trivial == 1:
        return SaddleClass.HALF_CLOSED
    if trivial == 2:
        return SaddleClass.FULLY_CLOSED
    return SaddleClass.FULLY_OPEN


@dataclass(frozen=True)
class HandleCores:
    """Axis-parallel scaffold lines threading the two sides of the surface.

    The level surface splits the torus into the region above and the region
    below the energy; each is a genus-3 handlebody threaded by three axis
    lines.  offsets[i] / neg_offsets[i] are the cross-section offset pairs
    of the axis-i line on the positive ({f > c}) and negative ({f < c})
    side, in the cyclic coordinate order CYCLE[i]; every integer translate
    of each line stays on its side with at least the stored margin.

    A null-homotopic loop on the surface bounds in exactly one of the two
    handlebodies, so its kernel-basis coefficients are read off by linking
    it with the other side's lines; combining both families makes the
    computation uniform across all four saddles.
    """

    offsets: tuple
    neg_offsets: tuple
    margins: tuple
    neg_margins: tuple

    def centers(self, axis: int, side: str = "pos") -> np.ndarray:
        src = self.offsets if side == "pos" else self.neg_offsets
        return np.asarray(src[axis], dtype=float)


_CORES_CACHE: dict = {}


def find_handle_cores(slice_: EnergySlice, scan_res: int = 64) -> HandleCores:
    """Pick, per axis and side, the line offset clearing the energy best.

    On the positive side the offset maximizes the line-minimum of f, on the
    negative side it minimizes the line-maximum; both extrema are exact for
    the separable test models.  Offsets come from a scan grid of the given
    resolution; a margin above 0.1 is the normal outcome, relaxed to strict
    positivity near the ends of the genus window.  Raises NoCore when a
    side has no clear line at all (the level set is a sphere).
    """
    key = (slice_.model.tag, float(slice_.energy), int(scan_res))
    hit = _CORES_CACHE.get(key)
    if hit is not None:
        return hit

    model = slice_.model
    ticks = np.arange(scan_res) / scan_res
    gv = model.profile(ticks)
    line_min = -1.0 + gv[:, None] + gv[None, :]
    line_max = 1.0 + gv[:, None] + gv[None, :]

    flat = int(np.argmax(line_min))
    iu, iv = divmod(flat, scan_res)
    pos_offset = (float(ticks[iu]), float(ticks[iv]))
    pos_margin = float(line_min[iu, iv]) - slice_.energy

    flat = int(np.argmin(line_max))
    iu, iv = divmod(flat, scan_res)
    neg_offset = (float(ticks[iu]), float(ticks[iv]))
    neg_margin = slice_.energy - float(line_max[iu, iv])

    if pos_margin <= 0.0 or neg_margin <= 0.0:
        raise NoCore(f"no axis line clears energy {slice_.energy} for {model.tag}")
    # separable models: the same offset pair works for every axis
    cores = HandleCores((pos_offset,) * 3, (neg_offset,) * 3,
                        (pos_margin,) * 3, (neg_margin,) * 3)
    _CORES_CACHE[key] = cores
    return cores


@dataclass(frozen=True)
class MillerIndex:
    """Sign-normalized integer triple labeling a stability zone."""

    label: tuple

    @classmethod
    def from_raw(cls, raw, direction: RationalDirection | None = None) -> "MillerIndex":
        lab = tuple(int(v) for v in raw)
        s = 0
        if direction is not None:
            s = sum(l * h for l, h in zip(lab, direction.h))
        if s == 0:
            nz = next((v for v in lab if v != 0), 0)
            s = nz
        if s < 0:
            lab = tuple(-v for v in lab)
        return cls(lab)

    @property
    def gcd(self) -> int:
        g = 0
        for v in self.label:
            g = math.gcd(g, abs(v))
        return g

    def __str__(self):
        return "({},{},{})".format(*self.label)


def miller_index_of_trivial_loop(loop: TracedLoop, cores: HandleCores,
                                 direction: RationalDirection) -> MillerIndex:
    """Linking numbers of a null-homotopic loop with the three scaffold families.

    The lifted loop is projected along each axis; per axis the component is
    the summed planar winding number around every lattice translate of the
    positive-side core inside the projection's bounding box, minus the same
    sum for the negative-side core.  A loop bounding on the positive side
    links only negative cores and vice versa, so the difference gives the
    same answer for every saddle's trivial loop.
    """
    if not loop.trivial:
        raise ValueError("loop must have zero winding vector")
    pts = loop.path.points
    raw = []
    for axis in range(3):
        j, k = CYCLE[axis]
        proj = pts[:, (j, k)]
        pos = _axis_linking(proj, cores.centers(axis, "pos"))
        neg = _axis_linking(proj, cores.centers(axis, "neg"))
        raw.append(pos - neg)
    return MillerIndex.from_raw(raw, direction)


def _axis_linking(proj: np.ndarray, offset) -> int:
    """Summed winding number of a closed polyline around one core family.

    Counts signed crossings of the horizontal lattice lines through the
    offset; each crossing at abscissa u contributes the number of rays
    (one per lattice column left of u) it sweeps past.  The divergent part
    cancels because the signed crossing count of a closed curve with every
    line is zero, leaving the sum of winding numbers over all translates
    in a single O(path) pass.
    """
    off = np.asarray(offset, dtype=float)
    for _attempt in range(2):
        u = proj[:, 0] - off[0]
        v = proj[:, 1] - off[1]
        ua, ub = u[:-1], u[1:]
        va, vb = v[:-1], v[1:]
        d = (np.floor(vb) - np.floor(va)).astype(int)
        if np.any(np.abs(d) > 1):
            raise ValueError("path segment spans more than one lattice line")
        idx = np.nonzero(d)[0]
        if len(idx) == 0:
            return 0
        sign = d[idx]
        line = np.where(sign > 0, np.floor(vb[idx]), np.floor(va[idx]))
        t = (line - va[idx]) / (vb[idx] - va[idx])
        ustar = ua[idx] + (ub[idx] - ua[idx]) * t
        frac = ustar - np.floor(ustar)
        if float(np.min(np.minimum(frac, 1.0 - frac))) < 1e-9:
            off = off + 1e-6
            continue
        return int(np.sum(sign * np.floor(ustar)))
    raise CoreOnLoop("projected core point lies on the loop polyline")


@dataclass
class ClassifyDiagnostics:
    n_critical: int = 0
    saddle_classes: list = field(default_factory=list)
    windings: list = field(default_factory=list)
    arclengths: list = field(default_factory=list)
    labels: list = field(default_factory=list)
    steps: int = 0
    note: str = "-"

    def to_line(self) -> str:
        classes = ",".join(_CLASS_ABBREV.get(c, "?") for c in self.saddle_classes) or "-"
        labels = ";".join(str(l) for l in self.labels) or "-"
        return (f"ncrit={self.n_critical} classes={classes} labels={labels} "
                f"steps={self.steps} arc={sum(self.arclengths):.3f} note={self.note}")


_CLASS_ABBREV = {
    SaddleClass.FULLY_OPEN: "FO",
    SaddleClass.HALF_CLOSED: "HC",
    SaddleClass.FULLY_CLOSED: "FC",
}


@dataclass
class ClassifyResult:
    label: MillerIndex | None
    outcome: str  # "labeled" | "topological" | "numerical"
    diagnostics: ClassifyDiagnostics

    def to_line(self) -> str:
        lab = str(self.label) if self.label else "-"
        return f"outcome={self.outcome} label={lab} {self.diagnostics.to_line()}"


def classify_direction(slice_: EnergySlice, direction: RationalDirection,
                       config: TraceConfig | None = None,
                       cores: HandleCores | None = None) -> ClassifyResult:
    """Full per-direction decision: Miller index or the reason there is none.

    Finds the four critical points, traces every saddle's figure-eight, and
    labels the direction when all four saddles are half-closed and their
    trivial loops agree on the index.  Topologically unlabeled directions
    (a fully open or fully closed saddle, or a saddle connection) are
    distinguished from numerical failures in the outcome field.
    """
    config = config or TraceConfig()
    diag = ClassifyDiagnostics()

    try:
        cps = find_critical_points(slice_, direction, config.seeds_per_axis,
                                   config.newton_tol, strict=True)
    except (UnexpectedCount, DegenerateDirection) as exc:
        diag.note = f"critical-points:{type(exc).__name__}"
        return ClassifyResult(None, "numerical", diag)

    diag.n_critical = len(cps)
    saddles = [cp for cp in cps if cp.kind == "saddle"]
    if len(saddles) != 4:
        diag.note = f"saddle-count:{len(saddles)}"
        return ClassifyResult(None, "numerical", diag)

    pair_loops = []
    for s in saddles:
        try:
            loops = trace_separatrix_loops(slice_, direction, s, cps, config)
        except SaddleConnection:
            diag.note = "saddle-connection"
            return ClassifyResult(None, "topological", diag)
        except (StepLimit, LostSurface) as exc:
            diag.note = f"trace:{type(exc).__name__}"
            return ClassifyResult(None, "numerical", diag)
        pair_loops.append(loops)
        diag.saddle_classes.append(classify_saddle(loops))
        diag.windings.append(tuple(tuple(lp.winding) for lp in loops))
        diag.arclengths.extend(lp.arclength for lp in loops)

    n_half = sum(1 for c in diag.saddle_classes if c is SaddleClass.HALF_CLOSED)
    if n_half == 4:
        if cores is None:
            cores = find_handle_cores(slice_)
        labels = []
        for s, loops in zip(saddles, pair_loops):
            trivial = next(lp for lp in loops if lp.trivial)
            try:
                labels.append(miller_index_of_trivial_loop(trivial, cores, direction))
            except CoreOnLoop:
                diag.note = "core-on-loop"
                return ClassifyResult(None, "numerical", diag)
        diag.labels = labels
        if any(lab.label != labels[0].label for lab in labels[1:]):
            diag.note = "label-disagreement"
            return ClassifyResult(None, "numerical", diag)
        if labels[0].label == (0, 0, 0):
            diag.note = "zero-label"
            return ClassifyResult(None, "numerical", diag)
        return ClassifyResult(labels[0], "labeled", diag)
    if n_half == 0:
        return ClassifyResult(None, "topological", diag)
    diag.note = f"class-disagreement:{n_half}/4"
    return ClassifyResult(None, "numerical", diag)
