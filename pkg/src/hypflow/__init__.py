"""hypflow: stability of hyperbolic balls under rescaled Ricci flow.

Desk-scale simulator and verification suite for rotationally symmetric
Ricci harmonic map heat flow on hyperbolic (and Euclidean) geodesic
balls: radial metric evolution, 2D conformal flow with exact barriers,
gauge/time-rescaling maps, first Dirichlet eigenvalues, and Lyapunov
decay diagnostics.
"""

from .conformal2d import ConformalState, Mode, barrier
from .diagnostics import (
    DecaySeries,
    FitResult,
    Record,
    fit_decay_rate,
    monotonicity_check,
)
from .errors import (
    ClosenessAbortError,
    ConfigurationError,
    FlowAbort,
    HypflowError,
    NumericalError,
    PositivityLossError,
)
from .gauge import DiffeoState, TimeMap, deturck_field, integrate_diffeo
from .geometry import Background, BackgroundGeometry, RadialGrid
from .radial_flow import (
    Boundary,
    FlowParams,
    FlowResult,
    RadialMetricState,
    evolve,
    rhs,
    step,
)
from .spectral import (
    EigenResult,
    RadialEigenProblem,
    first_dirichlet_eigenvalue,
    mckean_gap,
    shooting_first_eigenvalue,
)

__version__ = "0.1.0"

__all__ = [
    "Background",
    "BackgroundGeometry",
    "Boundary",
    "ClosenessAbortError",
    "ConfigurationError",
    "ConformalState",
    "DecaySeries",
    "DiffeoState",
    "EigenResult",
    "FitResult",
    "FlowAbort",
    "FlowParams",
    "FlowResult",
    "HypflowError",
    "Mode",
    "NumericalError",
    "PositivityLossError",
    "RadialEigenProblem",
    "RadialGrid",
    "RadialMetricState",
    "Record",
    "TimeMap",
    "barrier",
    "deturck_field",
    "evolve",
    "first_dirichlet_eigenvalue",
    "fit_decay_rate",
    "integrate_diffeo",
    "mckean_gap",
    "monotonicity_check",
    "rhs",
    "shooting_first_eigenvalue",
    "step",
    "__version__",
]
