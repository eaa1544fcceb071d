"""Exception hierarchy.

Every numerical failure derives from :class:`NumericalError` so the CLI can
map it to a single exit code; :class:`NoViolationFound` is kept apart because
it is a legitimate outcome for convex fluxes.
"""

from __future__ import annotations


class HJSelectError(Exception):
    """Base class for all package errors."""


class ConfigError(HJSelectError):
    """Invalid user configuration."""


class NumericalError(HJSelectError):
    """A numerical routine could not produce a trustworthy answer."""


class NonConcaveObjective(NumericalError):
    pass


class SearchIntervalTooSmall(NumericalError):
    pass


class UnpaddedDomain(NumericalError):
    pass


class AnchorInvaded(NumericalError):
    pass


class NoCrossing(NumericalError):
    pass


class DegenerateJump(NumericalError):
    pass


class StateReconstructionFailed(NumericalError):
    pass


class OnShock(NumericalError):
    pass


class StepTooLarge(NumericalError):
    pass


class NoViolationFound(HJSelectError):
    """No Oleinik chord violation on any tracked shock."""
