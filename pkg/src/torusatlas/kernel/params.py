"""Shared contract between the compiled and pure-Python tracing kernels."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MODEL_COS = 0
MODEL_PWQ = 1

STATUS_CAPTURED = 0
STATUS_STEP_LIMIT = 1
STATUS_LOST_SURFACE = 2

# plane membership tolerance for lift identification, in normalized height
PLANE_TOL = 1e-6
# projection acceptance threshold on |f - c|
SURFACE_TOL = 1e-9


@dataclass
class TraceOutcome:
    """Result of tracing one leaf of the plane section.

    status: STATUS_* code.
    hit_target: index into the capture-target array, or -1.
    hit_shift: integer lattice shift of the captured lift, or zeros.
    nsteps: accepted integration steps.
    arclength: length of the polyline.
    path: (m, 3) cover points, ending exactly on the captured lift.
    """

    status: int
    hit_target: int
    hit_shift: np.ndarray
    nsteps: int
    arclength: float
    path: np.ndarray
