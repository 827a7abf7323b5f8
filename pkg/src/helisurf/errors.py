"""Exception types shared across the package."""

from __future__ import annotations


class ParseError(ValueError):
    """Malformed prescription expression.

    Carries the character position and a description of what was expected.
    """

    def __init__(self, message: str, position: int, expected: str = ""):
        self.position = position
        self.expected = expected
        detail = f"{message} at position {position}"
        if expected:
            detail += f" (expected {expected})"
        super().__init__(detail)


class DomainError(ValueError):
    """Evaluation requested outside the mathematical domain."""


class EmptyNullclineError(RuntimeError):
    """The requested nullcline has no points in the window (it may not exist)."""


class NoEquilibriumError(ValueError):
    """The phase space has no equilibrium (requires eps * h(0) > 0)."""


class NoAxisOrbitError(ValueError):
    """No orbit meets the rotation axis for this orientation (needs eps * h(0) >= 0)."""


class NotAtAxisError(ValueError):
    """Orbit continuation requested but the orbit does not end at an axis approach."""


class OnNullclineError(ValueError):
    """Monotonicity signs are undefined on a nullcline; caller should refine."""


class StepFailureError(RuntimeError):
    """The integrator could not meet the local tolerance; carries the last state."""

    def __init__(self, message: str, state=None):
        self.state = state
        super().__init__(message)


class DomainExitError(RuntimeError):
    """Integration state left the admissible domain."""


class InconclusiveOrbitError(RuntimeError):
    """Classification horizon too short; carries the partial evidence gathered."""

    def __init__(self, message: str, evidence: dict | None = None):
        self.evidence = evidence or {}
        super().__init__(message)


class NoReturnError(RuntimeError):
    """No Poincare return found within the integration horizon."""


class DegenerateJetError(ValueError):
    """Gauss map / curvature undefined: (x, x') = (0, 0) at the evaluation point."""


class DegenerateProfileError(ValueError):
    """Profile curve unusable for meshing (too short or collapsed)."""


class NormalMismatchError(RuntimeError):
    """One-sided boundary normals disagree at a gluing switch (integrator defect)."""


class UnclassifiedSurfaceError(RuntimeError):
    """Surface taxonomy could not be decided from the orbit evidence."""


class ConfigError(ValueError):
    """Invalid run configuration; the message names the offending field."""
