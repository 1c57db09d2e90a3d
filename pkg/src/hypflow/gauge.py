"""Time rescaling between the bare and normalized flows, and the
diffeomorphisms generated by the gauge vector field.

The normalized flow keeps the hyperbolic metric stationary; composing
with the exact time map and conformal factor 1 + 2(n-1)t recovers the
bare flow.  The radial gauge field V is integrated into a family of
radial diffeomorphisms whose pullback transports solutions between the
two gauges.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ConfigurationError, HypflowError
from .geometry import warp, warp_log_derivative
from .radial_flow import FlowResult, RadialMetricState, _one_sided_central

__all__ = [
    "TimeMap",
    "DiffeoState",
    "deturck_field",
    "integrate_diffeo",
    "pullback_metric",
    "DIFFEO_ODE_SIGN",
]

# Sign convention for ds/dt = sign * V with V the field returned by
# deturck_field (covariant definition, index raised with g).  Pinned by
# the pullback-defect comparison in the test suite: the pullback of a
# gauge-flow trajectory satisfies the normalized flow only for -1.
DIFFEO_ODE_SIGN = -1.0


@dataclass(frozen=True)
class TimeMap:
    """Mutually inverse maps between bare and normalized flow time."""

    n: int

    def __post_init__(self):
        if self.n < 2:
            raise ConfigurationError("dimension must be >= 2")

    @property
    def _k(self) -> float:
        return 2.0 * (self.n - 1)

    def to_scaled(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise ValueError("time must be >= 0")
        return np.log1p(self._k * t) / self._k

    def from_scaled(self, t_scaled):
        t_scaled = np.asarray(t_scaled, dtype=float)
        if np.any(t_scaled < 0):
            raise ValueError("time must be >= 0")
        return np.expm1(self._k * t_scaled) / self._k

    def scale_factor(self, t):
        """Conformal factor 1 + 2(n-1)t relating the two flows."""
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise ValueError("time must be >= 0")
        return 1.0 + self._k * t


def scaled_to_unscaled(tm: TimeMap, values, t):
    """Metric eigenvalues of the normalized flow at t_scaled(t) -> bare flow at t."""
    return np.asarray(values, dtype=float) * tm.scale_factor(t)


def unscaled_to_scaled(tm: TimeMap, values, t_scaled):
    """Inverse map: bare-flow eigenvalues at t(t_scaled) -> normalized flow."""
    t_scaled = np.asarray(t_scaled, dtype=float)
    return np.asarray(values, dtype=float) * np.exp(-tm._k * t_scaled)


def to_scaled_time(tm: TimeMap, t):
    return tm.to_scaled(t)


def from_scaled_time(tm: TimeMap, t_scaled):
    return tm.from_scaled(t_scaled)


def scaled_to_unscaled_metric(tm: TimeMap, state: RadialMetricState) -> RadialMetricState:
    """Map a normalized-flow state at its scaled time to the bare flow."""
    t = float(tm.from_scaled(state.t))
    factor = float(tm.scale_factor(t))
    return RadialMetricState(
        state.geom, state.grid, state.a * factor, state.b * factor, t
    )


def unscaled_to_scaled_metric(tm: TimeMap, state: RadialMetricState) -> RadialMetricState:
    """Inverse of :func:`scaled_to_unscaled_metric`."""
    ts = float(tm.to_scaled(state.t))
    factor = math.exp(-tm._k * ts)
    return RadialMetricState(
        state.geom, state.grid, state.a * factor, state.b * factor, ts
    )


@dataclass
class DiffeoState:
    """Radial diffeomorphism profile s(rho) at one time."""

    grid: object
    s: np.ndarray
    t: float

    def __post_init__(self):
        self.s = np.ascontiguousarray(self.s, dtype=float)
        if self.s.shape != (self.grid.m + 1,):
            raise ConfigurationError("profile length must match the grid")

    def check_monotone(self):
        if np.any(np.diff(self.s) <= 0):
            node = int(np.argmax(np.diff(self.s) <= 0))
            raise HypflowError(
                f"diffeomorphism lost radial monotonicity at node {node}, "
                f"t = {self.t:.6g}"
            )


def deturck_field(state: RadialMetricState) -> np.ndarray:
    """Contravariant radial component of the gauge vector field.

    V = a'/(2a^2) - (n-1) b'/(2ab) + (n-1)(w'/w)(1/b - 1/a); V(0) = 0 by
    oddness.  Validated against the coordinate-Christoffel reference.
    """
    state.validate()
    n = state.geom.n
    a, b = state.a, state.b
    da = _one_sided_central(a, state.grid.dr)
    db = _one_sided_central(b, state.grid.dr)
    v = np.empty_like(a)
    c = warp_log_derivative(state.geom, state.grid.nodes[1:])
    v[1:] = (
        da[1:] / (2.0 * a[1:] ** 2)
        - (n - 1) * db[1:] / (2.0 * a[1:] * b[1:])
        + (n - 1) * c * (1.0 / b[1:] - 1.0 / a[1:])
    )
    v[0] = 0.0
    return v


class _FieldInterpolant:
    """V(s, t) from a recorded trajectory: cubic splines in space,
    cubic Hermite (Catmull-Rom slopes) in time."""

    def __init__(self, result: FlowResult):
        if not result.frames:
            raise ConfigurationError("integrate_diffeo needs kept frames")
        self.times = np.array([f.t for f in result.frames])
        if len(self.times) < 2:
            raise ConfigurationError("need at least two frames")
        self.splines = [
            CubicSpline(f.grid.nodes, deturck_field(f)) for f in result.frames
        ]
        self.R = result.frames[0].grid.R

    def __call__(self, s, t):
        times = self.times
        if t < times[0] - 1e-12 or t > times[-1] + 1e-9:
            raise ConfigurationError("time outside the recorded trajectory")
        if np.any(s < -1e-6) or np.any(s > self.R + 1e-6):
            raise ConfigurationError("radius outside the recorded grid")
        s = np.clip(s, 0.0, self.R)
        k = int(np.searchsorted(times, t, side="right") - 1)
        k = min(max(k, 0), len(times) - 2)
        h = times[k + 1] - times[k]
        x = (t - times[k]) / h
        v0 = self.splines[k](s)
        v1 = self.splines[k + 1](s)
        m0 = self._slope(k, s) * h
        m1 = self._slope(k + 1, s) * h
        h00 = 2 * x**3 - 3 * x**2 + 1
        h10 = x**3 - 2 * x**2 + x
        h01 = -2 * x**3 + 3 * x**2
        h11 = x**3 - x**2
        return h00 * v0 + h10 * m0 + h01 * v1 + h11 * m1

    def _slope(self, k, s):
        times, spl = self.times, self.splines
        if k == 0:
            return (spl[1](s) - spl[0](s)) / (times[1] - times[0])
        if k == len(times) - 1:
            return (spl[-1](s) - spl[-2](s)) / (times[-1] - times[-2])
        return (spl[k + 1](s) - spl[k - 1](s)) / (times[k + 1] - times[k - 1])


def integrate_diffeo(result: FlowResult, sign: float = DIFFEO_ODE_SIGN):
    """Integrate ds/dt = sign * V(s, t) per node along a recorded run.

    Returns the trajectory of :class:`DiffeoState` at the frame times,
    starting from the identity.  Monotonicity in rho is checked at every
    frame; losing it raises with the offending node and time.
    """
    field = _FieldInterpolant(result)
    grid = result.frames[0].grid
    times = field.times
    s = grid.nodes.copy()
    out = [DiffeoState(grid, s.copy(), float(times[0]))]
    for k in range(len(times) - 1):
        t0, t1 = times[k], times[k + 1]
        dt = t1 - t0
        k1 = sign * field(s, t0)
        k2 = sign * field(s + 0.5 * dt * k1, t0 + 0.5 * dt)
        k3 = sign * field(s + 0.5 * dt * k2, t0 + 0.5 * dt)
        k4 = sign * field(s + dt * k3, t1)
        s = s + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        s[0] = 0.0
        # round-off level drift past the outer radius is clamped so the
        # trajectory stays a self-map of the ball
        np.clip(s, 0.0, grid.R, out=s)
        state = DiffeoState(grid, s.copy(), float(t1))
        state.check_monotone()
        out.append(state)
    return out


def pullback_metric(state: RadialMetricState, diffeo: DiffeoState) -> RadialMetricState:
    """Pull the metric back by the radial map s.

    lambda_1(rho) = s'(rho)^2 a(s(rho)),
    lambda_2(rho) = b(s(rho)) w(s(rho))^2 / w(rho)^2,
    with s' by central differences and a, b cubic-interpolated at s(rho).
    """
    if diffeo.grid.m != state.grid.m or diffeo.grid.R != state.grid.R:
        raise ConfigurationError("state and diffeomorphism must share a grid")
    diffeo.check_monotone()
    s = diffeo.s
    if np.any(s < -1e-12) or np.any(s > state.grid.R + 1e-9):
        raise ConfigurationError("diffeomorphism image leaves the grid")
    nodes = state.grid.nodes
    sp = _one_sided_central(s, state.grid.dr)
    a_at = CubicSpline(nodes, state.a)(s)
    b_at = CubicSpline(nodes, state.b)(s)
    lam1 = sp**2 * a_at
    lam2 = np.empty_like(lam1)
    w_nodes = warp(state.geom, nodes[1:])
    lam2[1:] = b_at[1:] * warp(state.geom, s[1:]) ** 2 / w_nodes**2
    lam2[0] = b_at[0] * sp[0] ** 2  # limit w(s)/w(rho) -> s'(0)
    return RadialMetricState(state.geom, state.grid, lam1, lam2, state.t)
