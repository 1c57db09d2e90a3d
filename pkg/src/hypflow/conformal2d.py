"""Two-dimensional conformal Ricci flow on hyperbolic balls.

The metric is ``e^u h`` with ``h`` the curvature -1 metric on the disk;
in geodesic polar coordinates the flow reads

    rescaled:    du/dt = e^{-u} (u'' + coth(rho) u') + 2 (e^{-u} - 1)
    unrescaled:  du/dt = e^{-u} (u'' + coth(rho) u') + 2 e^{-u}

with the origin Laplacian limit 2 u''(0) by even symmetry.  Spatially
constant solutions of the rescaled equation are the exact barriers
log(1 + a e^{-2t}).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .diagnostics import DecaySeries, measure
from .errors import ClosenessAbortError, ConfigurationError
from .geometry import Background, BackgroundGeometry, RadialGrid, warp_log_derivative
from .radial_flow import Boundary, FlowParams, RadialMetricState, _one_sided_central

__all__ = [
    "Mode",
    "ConformalState",
    "ConformalResult",
    "rhs_conformal",
    "barrier",
    "step",
    "evolve",
    "comparison_check",
    "gamma_shift_residual",
]

_H2 = BackgroundGeometry(Background.HYPERBOLIC, 2)


class Mode(enum.Enum):
    RESCALED = "rescaled"
    UNRESCALED = "unrescaled"


@dataclass
class ConformalState:
    """Radial conformal exponent u(rho, t); the metric is e^u h."""

    grid: RadialGrid
    u: np.ndarray
    t: float = 0.0
    mode: Mode = Mode.RESCALED

    def __post_init__(self):
        self.u = np.ascontiguousarray(self.u, dtype=float)
        if self.u.shape != (self.grid.m + 1,):
            raise ConfigurationError("profile length must match the grid")
        if not np.all(np.isfinite(self.u)):
            raise ConfigurationError("u must be finite")

    def copy(self) -> "ConformalState":
        return replace(self, u=self.u.copy())

    def as_radial_state(self) -> RadialMetricState:
        """Equivalent n = 2 eigenvalue state (a = b = e^u) for diagnostics."""
        eu = np.exp(self.u)
        return RadialMetricState(_H2, self.grid, eu, eu.copy(), self.t)


@dataclass
class ConformalResult:
    state: ConformalState
    series: DecaySeries
    frames: list = field(default_factory=list)


def barrier(a: float, t) -> float:
    """Exact spatially constant rescaled solution log(1 + a e^{-2t})."""
    if a <= -1:
        raise ValueError("barrier amplitude must exceed -1")
    return np.log(1.0 + a * np.exp(-2.0 * np.asarray(t, dtype=float)))


def _laplacian(u: np.ndarray, grid: RadialGrid, coth: np.ndarray) -> np.ndarray:
    """Radial hyperbolic Laplacian u'' + coth(rho) u'; origin limit 2 u''(0)."""
    dr = grid.dr
    out = np.empty_like(u)
    upp = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / dr**2
    up = (u[2:] - u[:-2]) / (2.0 * dr)
    out[1:-1] = upp + coth[1:-1] * up
    out[0] = 2.0 * 2.0 * (u[1] - u[0]) / dr**2
    out[-1] = 0.0  # boundary row is pinned
    return out


def rhs_conformal(state: ConformalState, constant_mode: bool = False) -> np.ndarray:
    """du/dt for the selected mode; zero on the Dirichlet boundary row."""
    emu = np.exp(-state.u)
    if constant_mode:
        lap = 0.0
    else:
        coth = np.empty(state.grid.m + 1)
        coth[0] = 0.0
        coth[1:] = warp_log_derivative(_H2, state.grid.nodes[1:])
        lap = _laplacian(state.u, state.grid, coth)
    if state.mode is Mode.RESCALED:
        udot = emu * lap + 2.0 * (emu - 1.0)
    else:
        udot = emu * lap + 2.0 * emu
    if not constant_mode:
        udot[-1] = 0.0
    return udot


def _timestep(state: ConformalState, params: FlowParams) -> float:
    if params.dt is not None:
        return params.dt
    if params.boundary is Boundary.NO_BOUNDARY_CONSTANT:
        raise ConfigurationError("constant mode needs an explicit dt")
    return params.cfl * state.grid.dr**2 * float(np.min(np.exp(state.u)))


def _rk4(state: ConformalState, dt: float, constant_mode: bool) -> np.ndarray:
    u, t = state.u, state.t
    probe = state.copy()

    def f(v):
        probe.u = v
        return rhs_conformal(probe, constant_mode)

    k1 = f(u)
    k2 = f(u + 0.5 * dt * k1)
    k3 = f(u + 0.5 * dt * k2)
    k4 = f(u + dt * k3)
    return u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def step(state: ConformalState, params: FlowParams) -> ConformalState:
    """One RK4 step; Dirichlet boundary value re-imposed afterwards."""
    constant = params.boundary is Boundary.NO_BOUNDARY_CONSTANT
    if constant and np.ptp(state.u) > 1e-12:
        raise ConfigurationError("constant mode requires spatially constant u")
    dt = _timestep(state, params)
    out = state.copy()
    out.u = _rk4(state, dt, constant)
    out.t = state.t + dt
    if not constant:
        out.u[-1] = state.u[-1]
    # the unrescaled flow expands without bound by design, so the
    # closeness abort only guards the rescaled equation
    if state.mode is Mode.RESCALED:
        eps = float(np.max(np.abs(np.exp(out.u) - 1.0)))
        if eps > params.eps_abort:
            raise ClosenessAbortError(eps, params.eps_abort, out.t)
    return out


def evolve(
    state: ConformalState,
    params: FlowParams,
    sink: Optional[Callable] = None,
    keep_frames: bool = False,
) -> ConformalResult:
    """Integrate to t_end; same recording contract as the radial flow."""
    current = state.copy()
    series = DecaySeries()
    frames = []

    def record():
        rad = current.as_radial_state()
        dz = _one_sided_central(np.exp(current.u), current.grid.dr)
        max_grad = float(np.sqrt(2.0 * np.max(dz**2)))  # a = b, X = 0, n = 2
        rec = measure(rad, max_grad, params.delta, params.p)
        series.append(rec)
        if keep_frames:
            frames.append(current.copy())
        if sink is not None:
            sink(rec)

    record()
    pending = 0
    while current.t < params.t_end * (1.0 - 1e-12) - 1e-15:
        dt = min(_timestep(current, params), params.t_end - current.t)
        constant = params.boundary is Boundary.NO_BOUNDARY_CONSTANT
        current.u = _rk4(current, dt, constant)
        current.t += dt
        if not constant:
            current.u[-1] = state.u[-1]
        if current.mode is Mode.RESCALED:
            eps = float(np.max(np.abs(np.exp(current.u) - 1.0)))
            if eps > params.eps_abort:
                raise ClosenessAbortError(
                    eps, params.eps_abort, current.t, current, series
                )
        pending += 1
        if pending >= params.record_every:
            record()
            pending = 0
    if pending:
        record()
    return ConformalResult(current, series, frames)


def comparison_check(
    lo: ConformalState,
    hi: ConformalState,
    params: FlowParams,
    tol: float = 1e-8,
):
    """Evolve an ordered pair and test preservation of lo.u <= hi.u.

    Returns (ordered, max_violation) where the violation is
    max over recorded times and nodes of (lo.u - hi.u)_+.
    """
    if lo.grid.m != hi.grid.m or lo.grid.R != hi.grid.R:
        raise ConfigurationError("comparison requires a common grid")
    if lo.mode is not hi.mode:
        raise ConfigurationError("comparison requires a common mode")
    if np.any(lo.u > hi.u + 1e-14):
        raise ConfigurationError("initial data must satisfy lo.u <= hi.u")
    a, b = lo.copy(), hi.copy()
    constant = params.boundary is Boundary.NO_BOUNDARY_CONSTANT
    violation = 0.0
    while a.t < params.t_end * (1.0 - 1e-12) - 1e-15:
        dt = min(_timestep(a, params), _timestep(b, params),
                 params.t_end - a.t)
        a.u = _rk4(a, dt, constant)
        b.u = _rk4(b, dt, constant)
        a.t += dt
        b.t = a.t
        violation = max(violation, float(np.max(a.u - b.u)))
    return violation <= tol, violation


# --------------------------------------------------------------------------
# time-shift device for the unrescaled equation
# --------------------------------------------------------------------------

def _laplacian4(u: np.ndarray, grid: RadialGrid, coth: np.ndarray) -> np.ndarray:
    """Fourth-order stencil Laplacian on interior nodes 2..m-2.

    Used only by the residual monitor so that it measures the genuine
    spatial discretization error of a trajectory instead of reproducing
    the solver's own operator.
    """
    dr = grid.dr
    upp = (-u[4:] + 16 * u[3:-1] - 30 * u[2:-2] + 16 * u[1:-3] - u[:-4]) / (
        12 * dr**2
    )
    up = (-u[4:] + 8 * u[3:-1] - 8 * u[1:-3] + u[:-4]) / (12 * dr)
    return upp + coth[2:-2] * up


def gamma_shift_residual(result: ConformalResult, gamma: float) -> float:
    """PDE residual of the dilated-and-shifted trajectory u(rho, e^-gamma t) + gamma.

    The trajectory must come from an unrescaled run with frames kept.
    Values and slopes between frames are cubic-Hermite interpolated in
    time (slopes = recorded right-hand sides); the residual is sampled
    at frame times and frame midpoints on interior nodes.
    """
    frames = result.frames
    if not frames:
        raise ConfigurationError("gamma_shift_residual needs kept frames")
    if frames[0].mode is not Mode.UNRESCALED:
        raise ConfigurationError("time-shift device applies to the unrescaled mode")
    times = np.array([f.t for f in frames])
    t_end = times[-1]
    if math.exp(-gamma) * t_end > t_end + 1e-12:
        raise ConfigurationError("gamma dilates the trajectory outside its range")

    grid = frames[0].grid
    coth = np.empty(grid.m + 1)
    coth[0] = 0.0
    coth[1:] = warp_log_derivative(_H2, grid.nodes[1:])
    # spatially constant trajectories come from the no-boundary constant
    # mode, where every node moves; the Dirichlet rhs would wrongly zero
    # the boundary slope and the wide stencil below would see the error
    constant_run = all(float(np.ptp(f.u)) <= 1e-12 for f in frames)
    slopes = [rhs_conformal(f, constant_mode=constant_run) for f in frames]

    def interp(tau):
        k = int(np.searchsorted(times, tau, side="right") - 1)
        k = min(max(k, 0), len(times) - 2)
        h = times[k + 1] - times[k]
        s = (tau - times[k]) / h
        u0, u1 = frames[k].u, frames[k + 1].u
        m0, m1 = slopes[k] * h, slopes[k + 1] * h
        h00 = 2 * s**3 - 3 * s**2 + 1
        h10 = s**3 - 2 * s**2 + s
        h01 = -2 * s**3 + 3 * s**2
        h11 = s**3 - s**2
        val = h00 * u0 + h10 * m0 + h01 * u1 + h11 * m1
        d00 = 6 * s**2 - 6 * s
        d10 = 3 * s**2 - 4 * s + 1
        d01 = -d00
        d11 = 3 * s**2 - 2 * s
        der = (d00 * u0 + d10 * m0 + d01 * u1 + d11 * m1) / h
        return val, der

    # midpoints of near-degenerate frame intervals would amplify
    # round-off through the 1/h Hermite derivative; skip them
    spans = np.diff(times)
    good = spans > 1e-9 * (times[-1] - times[0])
    sample_times = np.unique(
        np.concatenate([times[1:], (times[:-1] + 0.5 * spans)[good]])
    )
    scale = math.exp(-gamma)
    # dilated times must stay inside the recorded window; for frames that
    # start at t > 0 this drops early samples instead of extrapolating
    sample_times = sample_times[scale * sample_times >= times[0] - 1e-15]
    if sample_times.size == 0:
        raise ConfigurationError("gamma dilates the trajectory outside its range")
    worst = 0.0
    for t in sample_times:
        tau = scale * t
        u_tau, udot_tau = interp(tau)
        u_shift = u_tau + gamma
        lap = _laplacian4(u_shift, grid, coth)
        pde = np.exp(-u_shift[2:-2]) * (lap + 2.0)
        resid = scale * udot_tau[2:-2] - pde
        worst = max(worst, float(np.max(np.abs(resid))))
    return worst
