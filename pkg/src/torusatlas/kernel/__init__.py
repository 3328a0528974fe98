"""Tracing kernel with compiled/pure-Python backend selection.

The Cython extension ``_fastcore`` is used when importable; otherwise the
pure-Python reference kernel takes over with identical semantics.  Set
``TORUSATLAS_KERNEL=python`` to force the fallback (the benchmark script
and the backend-parity tests do this explicitly).
"""

from __future__ import annotations

import os

from . import pycore
from .params import (  # noqa: F401
    MODEL_COS,
    MODEL_PWQ,
    PLANE_TOL,
    STATUS_CAPTURED,
    STATUS_LOST_SURFACE,
    STATUS_STEP_LIMIT,
    SURFACE_TOL,
    TraceOutcome,
)

if os.environ.get("TORUSATLAS_KERNEL", "").lower() in ("python", "py"):
    _impl = pycore
else:
    try:
        from . import _fastcore as _impl
    except ImportError:
        _impl = pycore

BACKEND = _impl.BACKEND

trace_leaf = _impl.trace_leaf
newton_critical_points = _impl.newton_critical_points


def get_backend(name: str):
    """Return a specific kernel module by name ('c' or 'python')."""
    if name == "python":
        return pycore
    if name == "c":
        from . import _fastcore

        return _fastcore
    raise ValueError(f"unknown backend {name!r}")
