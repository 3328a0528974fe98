"""Exception types shared across the package."""


class TorusAtlasError(Exception):
    """Base class for all package-specific errors."""


class DegenerateDirection(TorusAtlasError):
    """Direction for which a closed-form or numerical construction degenerates."""


class NotClosed(TorusAtlasError):
    """A path expected to close up in the torus does not."""


class OnBoundary(TorusAtlasError):
    """Query point sits on (or too close to) the polyline itself."""


class UnexpectedCount(TorusAtlasError):
    """Strict mode: the number of critical points differs from the expected four."""


class StepLimit(TorusAtlasError):
    """Trace exceeded the configured step cap."""


class LostSurface(TorusAtlasError):
    """Newton projection back onto the level surface diverged."""


class NearSaddle(TorusAtlasError):
    """A traced orbit entered the capture radius of a critical point.

    Carries enough context for the caller to treat the event as the endpoint
    of a cylinder of closed orbits.
    """

    def __init__(self, target_index, shift, point):
        super().__init__(f"orbit captured by critical point {target_index} + {tuple(shift)}")
        self.target_index = int(target_index)
        self.shift = tuple(int(s) for s in shift)
        self.point = point


class SaddleConnection(TorusAtlasError):
    """A separatrix trace terminated on a different saddle (or a translate)."""

    def __init__(self, target_index, shift):
        super().__init__(f"separatrix connects to critical point {target_index} + {tuple(shift)}")
        self.target_index = int(target_index)
        self.shift = tuple(int(s) for s in shift)


class NoCore(TorusAtlasError):
    """No axis line clears the energy level; outside the genus-3 window."""


class CoreOnLoop(TorusAtlasError):
    """A projected core point lies on the projected loop polyline."""


class NoCylinder(TorusAtlasError):
    """Neither side of the base critical plane carries a cylinder of closed orbits."""


class TooFewPoints(TorusAtlasError):
    """Not enough series points survive the discards to fit a line."""


class ResumeMismatch(TorusAtlasError):
    """Checkpoint header does not match the requested sweep."""
