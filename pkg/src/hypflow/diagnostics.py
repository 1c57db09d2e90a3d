"""Lyapunov quantities, norms, inequality residuals, and rate fits.

Everything here is a pure function of a flow state or a recorded series.
States are duck-typed: they carry ``geom``, ``grid``, and the eigenvalue
profiles ``a`` and ``b``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import ConfigurationError
from .geometry import unit_sphere_measure, volume_weight


class Record(NamedTuple):
    t: float
    I_L2: float
    I_delta: float
    I_p_delta: float
    sup_norm: float
    max_grad: float
    closeness: float


@dataclass
class DecaySeries:
    """Time series of diagnostics recorded along a flow run."""

    records: list = field(default_factory=list)

    def append(self, record: Record):
        if self.records and record.t <= self.records[-1].t:
            raise ConfigurationError("record times must be strictly increasing")
        self.records.append(record)

    def times(self) -> np.ndarray:
        return np.array([r.t for r in self.records])

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])

    def __len__(self):
        return len(self.records)


@dataclass(frozen=True)
class FitResult:
    rate: float
    log_amplitude: float
    rms_residual: float
    window: tuple


def _deviation_sq(state) -> np.ndarray:
    n = state.geom.n
    return (state.a - 1.0) ** 2 + (n - 1) * (state.b - 1.0) ** 2


def l2_lyapunov(state) -> float:
    """Integral of |g - h|^2 over the ball, trapezoid rule in rho."""
    geom = state.geom
    weight = volume_weight(geom, state.grid.nodes)
    integrand = _deviation_sq(state) * weight
    return unit_sphere_measure(geom.n) * float(np.trapezoid(integrand, dx=state.grid.dr))


def truncated_lyapunov(state, delta: float) -> float:
    """Same quadrature applied to the positive part (|g-h|^2 - delta)_+."""
    if delta < 0:
        raise ConfigurationError("delta must be >= 0")
    geom = state.geom
    weight = volume_weight(geom, state.grid.nodes)
    integrand = np.maximum(_deviation_sq(state) - delta, 0.0) * weight
    return unit_sphere_measure(geom.n) * float(np.trapezoid(integrand, dx=state.grid.dr))


def p_lyapunov(state, p: float, delta: float) -> float:
    """Truncated p-th power variant, (|g-h|^p - delta)_+."""
    if p < 2:
        raise ConfigurationError("p must be >= 2")
    if delta < 0:
        raise ConfigurationError("delta must be >= 0")
    geom = state.geom
    weight = volume_weight(geom, state.grid.nodes)
    integrand = np.maximum(_deviation_sq(state) ** (p / 2.0) - delta, 0.0) * weight
    return unit_sphere_measure(geom.n) * float(np.trapezoid(integrand, dx=state.grid.dr))


def sup_norm(state) -> float:
    """Pointwise sup of |g - h| over the grid."""
    return float(np.sqrt(np.max(_deviation_sq(state))))


def closeness(state) -> float:
    """max_j max(|a_j - 1|, |b_j - 1|), the eigenvalue closeness monitor."""
    return float(max(np.max(np.abs(state.a - 1.0)), np.max(np.abs(state.b - 1.0))))


def kato_residual(state) -> float:
    """max over nodes of |grad |Z||^2 - |grad Z|^2 (should be <= 0).

    The scalar gradient uses the same difference stencil as the frame
    components, so the discrete inequality is inherited from the reverse
    triangle inequality node by node.
    """
    from .radial_flow import frame_first_derivatives

    da, db, x = frame_first_derivatives(state)
    n = state.geom.n
    grad_z_sq = da**2 + (n - 1) * db**2 + 2 * (n - 1) * x**2
    z = np.sqrt(_deviation_sq(state))
    dz = _stencil_derivative(z, state.grid.dr)
    return float(np.max(dz**2 - grad_z_sq))


def _stencil_derivative(values: np.ndarray, dr: float) -> np.ndarray:
    """Central differences inside, one-sided at both ends."""
    out = np.empty_like(values)
    out[1:-1] = (values[2:] - values[:-2]) / (2 * dr)
    out[0] = (values[1] - values[0]) / dr
    out[-1] = (values[-1] - values[-2]) / dr
    return out


def fit_decay_rate(series: DecaySeries, name: str, window=None) -> FitResult:
    """Least-squares line through (t, log value); rate = minus the slope."""
    t = series.times()
    v = series.column(name)
    if window is None:
        t_end = t[-1]
        window = (t_end / 2.0, t_end)
    lo, hi = window
    mask = (t >= lo) & (t <= hi)
    if np.count_nonzero(mask) < 5:
        raise ConfigurationError("need at least 5 records in the fit window")
    if np.any(v[mask] <= 0):
        raise ConfigurationError(
            "nonpositive values in fit window (decayed to round-off?); "
            "shrink the window"
        )
    tt, lv = t[mask], np.log(v[mask])
    slope, intercept = np.polyfit(tt, lv, 1)
    resid = lv - (slope * tt + intercept)
    return FitResult(
        rate=-float(slope),
        log_amplitude=float(intercept),
        rms_residual=float(np.sqrt(np.mean(resid**2))),
        window=(float(lo), float(hi)),
    )


def monotonicity_check(series: DecaySeries, name: str, rate: float, tol: float):
    """Check I(t_{k+1}) <= e^{-rate (t_{k+1}-t_k)} I(t_k) (1 + tol) at every record.

    Returns (passed, worst_ratio) where worst_ratio is the largest
    I(t_{k+1}) / (e^{-rate dt} I(t_k)) encountered.
    """
    t = series.times()
    v = series.column(name)
    worst = 0.0
    for k in range(len(t) - 1):
        bound = math.exp(-rate * (t[k + 1] - t[k])) * v[k]
        if bound == 0.0:
            ratio = 1.0 if v[k + 1] == 0.0 else math.inf
        else:
            ratio = v[k + 1] / bound
        worst = max(worst, ratio)
    return worst <= 1.0 + tol, worst


def gradient_blowup_monitor(series: DecaySeries) -> float:
    """Observed constant in the first-derivative interior estimate.

    Returns max over recorded times 0 < t <= 1 of t * max_grad^2.
    """
    out = 0.0
    for r in series.records:
        if 0.0 < r.t <= 1.0:
            out = max(out, r.t * r.max_grad**2)
    return out


def interpolation_check(u_samples, du_samples, d2u_samples) -> float:
    """Violation of ||Du||^2_inf <= 32 ||u||_inf ||D^2 u||_inf (0 if satisfied)."""
    nu = float(np.max(np.abs(u_samples)))
    ndu = float(np.max(np.abs(du_samples)))
    nd2u = float(np.max(np.abs(d2u_samples)))
    return max(0.0, ndu**2 - 32.0 * nu * nd2u)


def measure(state, max_grad: float, delta: float = 0.0, p: float = 2.0) -> Record:
    """Assemble one series record from a state and its gradient bound."""
    return Record(
        t=float(state.t),
        I_L2=l2_lyapunov(state),
        I_delta=truncated_lyapunov(state, delta),
        I_p_delta=p_lyapunov(state, p, delta),
        sup_norm=sup_norm(state),
        max_grad=float(max_grad),
        closeness=closeness(state),
    )
