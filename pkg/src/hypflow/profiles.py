"""Named families of initial data for the radial flows.

Every family returns eigenvalue profiles compatible with the Dirichlet
boundary to second order (value and first two derivatives match h at
rho = R) and regular at the origin (even, with a(0) = b(0)).
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigurationError
from .geometry import BackgroundGeometry, RadialGrid
from .radial_flow import RadialMetricState

__all__ = [
    "bump",
    "constant",
    "aniso",
    "kinked",
    "random_smooth",
    "make_profile",
]


def _damp(rho: np.ndarray, R: float) -> np.ndarray:
    """Envelope e^{-rho^2} (1 - (rho/R)^2)^2: boundary-flat to 2nd order."""
    return np.exp(-(rho**2)) * (1.0 - (rho / R) ** 2) ** 2


def bump(geom: BackgroundGeometry, grid: RadialGrid, amplitude: float = 0.01):
    """Conformal bump a = b = 1 + amplitude * e^{-rho^2} (1-(rho/R)^2)^2."""
    rho = grid.nodes
    a = 1.0 + amplitude * _damp(rho, grid.R)
    return RadialMetricState(geom, grid, a, a.copy())


def constant(geom: BackgroundGeometry, grid: RadialGrid, value: float = 1.05):
    """Spatially constant a = b = value (for the no-boundary constant mode)."""
    if value <= 0:
        raise ConfigurationError("constant profile value must be positive")
    a = np.full(grid.m + 1, float(value))
    return RadialMetricState(geom, grid, a, a.copy())


def aniso(geom: BackgroundGeometry, grid: RadialGrid, amplitude: float = 0.01):
    """Anisotropic perturbation: a - b = O(rho^2) at the origin."""
    rho = grid.nodes
    damp = _damp(rho, grid.R)
    a = 1.0 + amplitude * damp
    b = a - amplitude * rho**2 * np.exp(1.0) * damp / (1.0 + rho**2)
    return RadialMetricState(geom, grid, a, b)


def kinked(geom: BackgroundGeometry, grid: RadialGrid, amplitude: float = 0.01):
    """Lipschitz-but-kinked conformal profile (triangle wave envelope).

    Continuous with a gradient jump at rho = R/2; used to exercise the
    gradient blow-up monitor with merely Lipschitz initial data.
    """
    rho = grid.nodes
    tri = np.minimum(rho, grid.R - rho) / (grid.R / 2.0)
    a = 1.0 + amplitude * np.maximum(tri, 0.0)
    return RadialMetricState(geom, grid, a, a.copy())


def random_smooth(
    geom: BackgroundGeometry,
    grid: RadialGrid,
    rng: np.random.Generator,
    amplitude: float = 0.02,
    terms: int = 4,
):
    """Random band-limited even perturbation, boundary-flat to 2nd order."""
    rho = grid.nodes
    damp = _damp(rho, grid.R)
    coeff_a = rng.uniform(-1.0, 1.0, terms)
    coeff_d = rng.uniform(-1.0, 1.0, terms)
    even = sum(c * np.cos(2.0 * np.pi * k * rho / grid.R)
               for k, c in enumerate(coeff_a))
    diff = sum(c * np.cos(2.0 * np.pi * k * rho / grid.R)
               for k, c in enumerate(coeff_d))
    a = 1.0 + amplitude * even * damp
    b = a - amplitude * rho**2 / (1.0 + rho**2) * diff * damp
    state = RadialMetricState(geom, grid, a, b)
    state.validate()
    return state


_FAMILIES = {
    "bump": bump,
    "constant": constant,
    "aniso": aniso,
    "kinked": kinked,
}


def make_profile(name: str, geom, grid, **kwargs) -> RadialMetricState:
    """Construct a named profile family; unknown names are rejected."""
    try:
        factory = _FAMILIES[name]
    except KeyError:
        known = ", ".join(sorted(_FAMILIES))
        raise ConfigurationError(
            f"unknown profile family {name!r} (known: {known})"
        ) from None
    return factory(geom, grid, **kwargs)
