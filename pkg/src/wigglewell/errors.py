"""Exception hierarchy.

Every error carries a short machine-readable ``category`` so the command
line layer can map failures to stable exit codes and structured messages.
"""

from __future__ import annotations


class WigglewellError(Exception):
    """Base class for all package errors."""

    category = "runtime"


class ConfigError(WigglewellError, ValueError):
    """Invalid or inconsistent user-supplied configuration."""

    category = "config"


class NotConfined(WigglewellError):
    """A requested bound state lies above the boundary potential.

    The finite difference solver always returns numbers; states at or above
    the edge potential are box artifacts, not well states, so they are
    rejected rather than silently returned.
    """

    category = "physics"


class DegenerateGrid(WigglewellError):
    """Grid has fewer than three points or non-uniform spacing."""

    category = "grid"


class GridTooCoarse(WigglewellError):
    """Grid cannot resolve the fastest oscillation of an integrand.

    Raised when a continuum-resolution grid provides fewer than six points
    per period of the highest spatial frequency entering a quadrature.
    """

    category = "grid"


class ExtentTooSmall(WigglewellError):
    """Lateral site grid truncates a non-negligible part of a dot's weight."""

    category = "grid"


class NoTransitionFound(WigglewellError):
    """Fitted transition amplitude is indistinguishable from noise."""

    category = "fit"


class NonConvergence(WigglewellError):
    """Least-squares refinement stopped without meeting its tolerances."""

    category = "fit"


class IllConditioned(WigglewellError):
    """Fit parameters are degenerate for the supplied data."""

    category = "fit"
