"""Exception hierarchy for the Gibbs concentration lab."""

from typing import Any, Optional


class LabError(Exception):
    """Base class for every error raised by the lab."""


class GeometryError(LabError, ValueError):
    """Out-of-window access, overflowing translates or a too thin collar."""


class WindowMismatchError(LabError, ValueError):
    """Two objects that must live on the same window do not."""


class PatternCodeError(LabError, ValueError):
    """Pattern code outside the pattern space."""


class MissingBoundaryError(LabError, KeyError):
    """A boundary spin inside the interaction range was not supplied."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "missing boundary spin"


class EnumerationCapError(LabError, RuntimeError):
    """An exact enumeration or sampling budget would be exceeded."""


class ShapeMismatchError(LabError, ValueError):
    """Pattern distributions with different supports or alphabets."""


class AbsoluteContinuityError(LabError, ValueError):
    """A pattern charged by nu has zero mass under mu."""

    def __init__(self, key: Any, message: Optional[str] = None):
        self.key = key
        super().__init__(message or f"nu is not absolutely continuous w.r.t. mu at pattern {key!r}")


class ScenarioError(LabError, ValueError):
    """Unknown scenario or inconsistent experiment spec."""


class DegenerateFunctionError(LabError, ValueError):
    """A bound needs a function with non-zero oscillation."""
