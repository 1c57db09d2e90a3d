"""Background geometry in geodesic polar coordinates.

The reference metric is written as ``h = d\\rho^2 + w(\\rho)^2 \\sigma``
with ``\\sigma`` the unit round metric on the (n-1)-sphere.  The warp
function is ``sinh(\\rho)`` for the hyperbolic background (sectional
curvature -1) and ``\\rho`` for the Euclidean one.  All quantities are
dimensionless.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Background",
    "BackgroundGeometry",
    "RadialGrid",
    "warp",
    "warp_log_derivative",
    "volume_weight",
    "disk_to_geodesic",
    "geodesic_to_disk",
    "unit_sphere_measure",
    "RHO_SERIES_THRESHOLD",
]

# Below this radius coth/1-over-rho is evaluated by its Laurent series
# 1/rho + kappa*rho/3; the 3-term series is accurate to ~1e-13 there.
RHO_SERIES_THRESHOLD = 1e-3


class Background(enum.Enum):
    HYPERBOLIC = "hyperbolic"
    EUCLIDEAN = "euclidean"


@dataclass(frozen=True)
class BackgroundGeometry:
    """Reference metric: background kind plus dimension n >= 2."""

    kind: Background
    n: int

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"dimension must be >= 2, got {self.n}")

    @property
    def hyperbolic(self) -> bool:
        return self.kind is Background.HYPERBOLIC


@dataclass(frozen=True)
class RadialGrid:
    """Uniform nodes rho_j = j*R/m, j = 0..m, on a geodesic ball of radius R."""

    R: float
    m: int
    nodes: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.R <= 0:
            raise ValueError(f"radius must be positive, got {self.R}")
        if self.m < 8:
            raise ValueError(f"need at least 8 interior nodes, got m={self.m}")
        object.__setattr__(self, "nodes", np.linspace(0.0, self.R, self.m + 1))

    @property
    def dr(self) -> float:
        return self.R / self.m


def warp(geom: BackgroundGeometry, rho):
    """Warp function w(rho): sinh(rho) hyperbolic, rho Euclidean."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0):
        raise ValueError("warp requires rho >= 0")
    if geom.hyperbolic:
        return np.sinh(rho)
    return rho + 0.0


def warp_log_derivative(geom: BackgroundGeometry, rho):
    """w'(rho)/w(rho): coth(rho) hyperbolic, 1/rho Euclidean.

    Near rho = 0 the direct quotient cancels catastrophically, so below
    ``RHO_SERIES_THRESHOLD`` the series 1/rho + kappa*rho/3 is used
    (kappa = +1 hyperbolic, 0 Euclidean).  rho = 0 itself is a domain
    error; callers handle the origin by even symmetry.
    """
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0):
        raise ValueError("warp_log_derivative requires rho > 0")
    if not geom.hyperbolic:
        return 1.0 / rho
    small = rho < RHO_SERIES_THRESHOLD
    safe = np.where(small, 1.0, rho)
    out = np.where(small, 1.0 / np.where(small, rho, 1.0) + rho / 3.0,
                   np.cosh(safe) / np.sinh(safe))
    return out if out.ndim else float(out)


def volume_weight(geom: BackgroundGeometry, rho):
    """Radial volume density w(rho)^(n-1) (sphere measure applied elsewhere)."""
    return warp(geom, rho) ** (geom.n - 1)


def unit_sphere_measure(n: int) -> float:
    """Measure of the unit (n-1)-sphere, 2 pi^(n/2) / Gamma(n/2)."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


def disk_to_geodesic(s):
    """Poincare-disk radius in [0,1) -> hyperbolic geodesic distance 2 artanh(s)."""
    s = np.asarray(s, dtype=float)
    if np.any((s < 0) | (s >= 1)):
        raise ValueError("disk radius must lie in [0, 1)")
    return np.log((1.0 + s) / (1.0 - s))


def geodesic_to_disk(rho):
    """Inverse of :func:`disk_to_geodesic`: tanh(rho/2)."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0):
        raise ValueError("geodesic radius must be >= 0")
    return np.tanh(rho / 2.0)
