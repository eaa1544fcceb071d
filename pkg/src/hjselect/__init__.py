"""Shock tracking, entropy certificates and viscosity references for scalar HJ / conservation-law pairs."""

from .errors import (
    AnchorInvaded,
    ConfigError,
    DegenerateJump,
    HJSelectError,
    NoCrossing,
    NonConcaveObjective,
    NoViolationFound,
    NumericalError,
    OnShock,
    SearchIntervalTooSmall,
    StateReconstructionFailed,
    StepTooLarge,
    UnpaddedDomain,
)
from .flux import (
    PiecewiseCubicFlux,
    build_paper_flux,
    convexity_report,
    eval_flux,
    legendre_conjugate,
    quadratic_flux,
    tangent_gap,
    theta_slice_analysis,
)
from .profiles import PiecewiseLinearProfile, build_initial_profile

__version__ = "0.1.0"
