"""First Dirichlet eigenvalue of the Laplace-Beltrami operator on
geodesic balls, and the gap over the hyperbolic lower bound (n-1)^2/4.

The first eigenfunction of a ball is radial, so the problem reduces to

    -(u'' + (n-1) (w'/w) u') = sigma u,   u'(0) = 0,  u(R) = 0.

Two independent methods are provided: inverse iteration on the
volume-weighted symmetric finite-difference matrix (the solver), and a
shooting method used as a cross-check oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import solve_banded
from scipy.optimize import brentq

from .errors import ConfigurationError, NumericalError
from .geometry import BackgroundGeometry, warp, warp_log_derivative

__all__ = [
    "RadialEigenProblem",
    "EigenResult",
    "first_dirichlet_eigenvalue",
    "mckean_gap",
    "shooting_first_eigenvalue",
]

MAX_INVERSE_ITERATIONS = 10_000  # documented iteration cap, shift 0


@dataclass(frozen=True)
class RadialEigenProblem:
    geom: BackgroundGeometry
    R: float
    m: int

    def __post_init__(self):
        if self.R <= 0:
            raise ConfigurationError("R must be positive")
        if self.m < 64:
            raise ConfigurationError("need m >= 64 nodes")


@dataclass(frozen=True)
class EigenResult:
    sigma1: float
    extrapolated: float
    error_estimate: float
    eigenfunction: np.ndarray
    nodes: np.ndarray
    iterations: int


def _weights(geom, R, m):
    """Midpoint stiffness weights and cell-integrated mass weights."""
    dr = R / m
    rho = np.linspace(0.0, R, m + 1)
    ph = warp(geom, rho[:-1] + dr / 2) ** (geom.n - 1)
    # mass: Simpson over each node cell; half cell at the origin
    d = np.empty(m)
    for j in range(m):
        lo = max(rho[j] - dr / 2, 0.0)
        hi = rho[j] + dr / 2
        mid = 0.5 * (lo + hi)
        fl, fm, fh = (warp(geom, np.array([lo, mid, hi])) ** (geom.n - 1))
        d[j] = (hi - lo) / 6.0 * (fl + 4.0 * fm + fh)
    return dr, ph, d


def _sigma_on_grid(geom, R, m):
    """Lowest generalized eigenpair by inverse iteration with shift 0."""
    dr, ph, d = _weights(geom, R, m)
    main = np.empty(m)
    main[0] = ph[0] / dr             # Neumann-by-symmetry at the origin
    main[1:] = (ph[:-1] + ph[1:]) / dr
    off = -ph[:-1] / dr
    # symmetrize with the mass weights: B = D^{-1/2} M D^{-1/2}
    s = 1.0 / np.sqrt(d)
    b_main = main * s * s
    b_off = off * s[:-1] * s[1:]
    ab = np.zeros((3, m))
    ab[0, 1:] = b_off
    ab[1, :] = b_main
    ab[2, :-1] = b_off

    x = np.ones(m)
    x /= np.linalg.norm(x)
    sigma = np.inf
    for it in range(1, MAX_INVERSE_ITERATIONS + 1):
        y = solve_banded((1, 1), ab, x)
        y /= np.linalg.norm(y)
        rq = float(
            y @ (b_main * y)
            + 2.0 * np.dot(b_off, y[:-1] * y[1:])
        )
        if abs(rq - sigma) <= 1e-14 * max(1.0, abs(rq)):
            sigma = rq
            x = y
            break
        sigma, x = rq, y
    else:
        raise NumericalError(
            f"inverse iteration did not converge in {MAX_INVERSE_ITERATIONS} steps"
        )
    u = x * s  # back to the unweighted eigenfunction
    u /= np.max(np.abs(u)) * np.sign(u[np.argmax(np.abs(u))])
    return sigma, u, it


def first_dirichlet_eigenvalue(problem: RadialEigenProblem) -> EigenResult:
    """sigma_1 with a Richardson error estimate from the half grid."""
    geom, R, m = problem.geom, problem.R, problem.m
    sigma, u, iters = _sigma_on_grid(geom, R, m)
    sigma_half, _, _ = _sigma_on_grid(geom, R, m // 2)
    extrapolated = (4.0 * sigma - sigma_half) / 3.0
    err = abs(sigma - sigma_half) / 3.0
    nodes = np.linspace(0.0, R, m + 1)
    eigenfunction = np.append(u, 0.0)
    return EigenResult(sigma, extrapolated, err, eigenfunction, nodes, iters)


def mckean_gap(geom: BackgroundGeometry, R: float, m: int) -> float:
    """sigma_1(B_R) - (n-1)^2/4; the bound is hyperbolic-specific."""
    if not geom.hyperbolic:
        raise ConfigurationError("the eigenvalue lower bound holds on "
                                 "hyperbolic domains only")
    res = first_dirichlet_eigenvalue(RadialEigenProblem(geom, R, m))
    return res.extrapolated - (geom.n - 1) ** 2 / 4.0


# --------------------------------------------------------------------------
# shooting cross-check
# --------------------------------------------------------------------------

def _shoot_endpoint(geom, R, sigma):
    n = geom.n
    r0 = 1e-8
    u0 = 1.0 - sigma * r0**2 / (2 * n)
    v0 = -sigma * r0 / n

    def f(r, y):
        u, v = y
        c = warp_log_derivative(geom, r)
        return (v, -(n - 1) * c * v - sigma * u)

    sol = solve_ivp(f, (r0, R), (u0, v0), method="DOP853",
                    rtol=1e-12, atol=1e-14)
    if not sol.success:
        raise NumericalError(f"shooting integration failed: {sol.message}")
    return float(sol.y[0, -1])


def shooting_first_eigenvalue(
    geom: BackgroundGeometry,
    R: float,
    sigma_max: Optional[float] = None,
    xtol: float = 1e-12,
) -> float:
    """First Dirichlet eigenvalue by shooting.

    Scans sigma upward until u(R) changes sign, then refines by
    bisection; the first sign change is the first eigenvalue.
    """
    lo = 1e-6
    f_lo = _shoot_endpoint(geom, R, lo)
    hi = lo
    cap = sigma_max if sigma_max is not None else 1e6
    while True:
        hi *= 1.5
        if hi > cap:
            raise NumericalError("no sign change found while scanning sigma")
        f_hi = _shoot_endpoint(geom, R, hi)
        if f_lo * f_hi < 0:
            break
        lo, f_lo = hi, f_hi
    return float(brentq(lambda s: _shoot_endpoint(geom, R, s), lo, hi, xtol=xtol))
