"""Rescaled Ricci harmonic map heat flow for rotationally symmetric metrics.

The metric on a geodesic ball is ``g = a(rho,t) drho^2 + b(rho,t) w(rho)^2
sigma`` and is stored through its two eigenvalue profiles (a, b) in the
h-orthonormal frame.  The evolution equation is assembled term by term in
that frame: degenerate Laplacian, zeroth-order reaction terms (hyperbolic
background only), and the quadratic gradient terms.  The frame reduction
was fixed against an independent coordinate-Christoffel computation, see
:mod:`hypflow.oracles`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from numba import njit

from .diagnostics import DecaySeries, measure
from .errors import ClosenessAbortError, ConfigurationError, PositivityLossError
from .geometry import BackgroundGeometry, RadialGrid, warp_log_derivative

__all__ = [
    "Boundary",
    "RadialMetricState",
    "FlowParams",
    "FlowResult",
    "frame_first_derivatives",
    "rhs",
    "step",
    "evolve",
    "zeroth_order_term",
]


class Boundary(enum.Enum):
    DIRICHLET = "dirichlet"
    NO_BOUNDARY_CONSTANT = "no-boundary-constant"


@dataclass
class RadialMetricState:
    """Eigenvalue profiles (a, b) of g relative to h on a radial grid."""

    geom: BackgroundGeometry
    grid: RadialGrid
    a: np.ndarray
    b: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.a = np.ascontiguousarray(self.a, dtype=float)
        self.b = np.ascontiguousarray(self.b, dtype=float)
        if self.a.shape != (self.grid.m + 1,) or self.b.shape != (self.grid.m + 1,):
            raise ConfigurationError("profile length must match the grid")

    def validate(self):
        if np.any(self.a <= 0) or np.any(self.b <= 0):
            bad = int(np.argmax((self.a <= 0) | (self.b <= 0)))
            raise PositivityLossError(bad, self.t)
        return self

    def copy(self) -> "RadialMetricState":
        return replace(self, a=self.a.copy(), b=self.b.copy())


@dataclass
class FlowParams:
    """Run controls for the radial flow.

    ``dt`` overrides the parabolic CFL step when set; it is required in
    constant mode, where no spatial scale exists.  ``delta`` and ``p``
    configure the truncated Lyapunov diagnostics recorded along the run.
    """

    boundary: Boundary = Boundary.DIRICHLET
    cfl: float = 0.2
    t_end: float = 1.0
    record_every: int = 100
    eps_abort: float = 0.5
    dt: Optional[float] = None
    delta: float = 0.0
    p: float = 2.0

    def __post_init__(self):
        if not 0 < self.cfl <= 0.5:
            raise ConfigurationError(f"cfl must be in (0, 0.5], got {self.cfl}")
        if not 0 < self.eps_abort < 1:
            raise ConfigurationError("eps_abort must be in (0, 1)")
        if self.t_end < 0:
            raise ConfigurationError("t_end must be >= 0")
        if self.record_every < 1:
            raise ConfigurationError("record_every must be >= 1")


@dataclass
class FlowResult:
    state: RadialMetricState
    series: DecaySeries
    frames: list = field(default_factory=list)


# --------------------------------------------------------------------------
# frame components of the first covariant derivative
# --------------------------------------------------------------------------

def frame_first_derivatives(state: RadialMetricState):
    """Frame components (D_rho a, D_rho b, X) of the covariant derivative of g.

    X = (w'/w)(a - b) is the mixed radial/angular component from frame
    rotation; it enters the squared norm with multiplicity 2(n-1):
    |grad g|^2 = (D_rho a)^2 + (n-1)(D_rho b)^2 + 2(n-1) X^2.
    """
    grid = state.grid
    if grid.m < 8:
        raise ConfigurationError("grid too coarse for derivative stencils")
    dr = grid.dr
    da = _one_sided_central(state.a, dr)
    db = _one_sided_central(state.b, dr)
    x = np.empty_like(da)
    x[0] = 0.0  # limit of (w'/w)(a-b) at the origin for a regular metric
    x[1:] = warp_log_derivative(state.geom, grid.nodes[1:]) * (
        state.a[1:] - state.b[1:]
    )
    return da, db, x


def _one_sided_central(values: np.ndarray, dr: float) -> np.ndarray:
    out = np.empty_like(values)
    out[1:-1] = (values[2:] - values[:-2]) / (2 * dr)
    out[0] = (values[1] - values[0]) / dr
    out[-1] = (values[-1] - values[-2]) / dr
    return out


# --------------------------------------------------------------------------
# right-hand side
# --------------------------------------------------------------------------

@njit(cache=True)
def _rhs_kernel(a, b, c, n, dr, hyperbolic, adot, bdot):  # pragma: no cover
    """Frame-reduced evolution terms; returns first nonpositive node or -1.

    ``c`` holds w'/w at the nodes (entry 0 unused; the origin row uses the
    even-symmetry limits).  The Dirichlet boundary row is zeroed.
    """
    m = a.shape[0] - 1
    for j in range(m + 1):
        if a[j] <= 0.0 or b[j] <= 0.0:
            return j
    inv_dr2 = 1.0 / (dr * dr)

    # origin row: ghost reflection, Laplacian limits c*f' -> f'' and
    # 2 c^2 (a-b) -> a'' - b''
    app0 = 2.0 * (a[1] - a[0]) * inv_dr2
    bpp0 = 2.0 * (b[1] - b[0]) * inv_dr2
    adot[0] = app0 / a[0] + (n - 1) * bpp0 / b[0]
    bdot[0] = bpp0 / a[0] + (n - 1) * bpp0 / b[0] + (app0 - bpp0) / b[0]

    for j in range(1, m):
        aj = a[j]
        bj = b[j]
        ap = (a[j + 1] - a[j - 1]) / (2.0 * dr)
        bp = (b[j + 1] - b[j - 1]) / (2.0 * dr)
        app = (a[j + 1] - 2.0 * aj + a[j - 1]) * inv_dr2
        bpp = (b[j + 1] - 2.0 * bj + b[j - 1]) * inv_dr2
        cj = c[j]
        x = cj * (aj - bj)
        # degenerate Laplacian g^{kl} nabla_k nabla_l g in the frame
        lap_a = app / aj + (n - 1) * (cj * ap - 2.0 * cj * x) / bj
        lap_b = bpp / aj + (n - 1) * cj * bp / bj + 2.0 * cj * x / bj
        # quadratic gradient terms of the evolution equation
        q_a = -1.5 * ap * ap / (aj * aj) + (n - 1) * (bp * bp - 4.0 * bp * x) / (
            2.0 * bj * bj
        )
        q_b = -(bp * bp + 2.0 * x * x) / (aj * bj)
        adot[j] = lap_a + q_a
        bdot[j] = lap_b + q_b

    if hyperbolic:
        for j in range(m):
            aj = a[j]
            bj = b[j]
            trace = (1.0 - aj) / aj + (n - 1) * (1.0 - bj) / bj
            adot[j] += 2.0 * aj * trace + 2.0 * (aj - 1.0)
            bdot[j] += 2.0 * bj * trace + 2.0 * (bj - 1.0)

    adot[m] = 0.0
    bdot[m] = 0.0
    return -1


def _coth_table(state: RadialMetricState) -> np.ndarray:
    c = np.empty(state.grid.m + 1)
    c[0] = 0.0  # never used; origin handled by symmetry
    c[1:] = warp_log_derivative(state.geom, state.grid.nodes[1:])
    return c


def _constant_mode_rhs(state, adot, bdot):
    if (np.ptp(state.a) > 1e-12 * max(1.0, np.max(np.abs(state.a)))
            or np.ptp(state.b) > 1e-12 * max(1.0, np.max(np.abs(state.b)))
            or abs(state.a[0] - state.b[0]) > 1e-12):
        raise ConfigurationError(
            "constant mode requires spatially constant a = b"
        )
    if state.geom.hyperbolic:
        n = state.geom.n
        lam = state.a
        adot[:] = 2.0 * (n - 1) * (1.0 - lam)
    else:
        adot[:] = 0.0
    bdot[:] = adot


def rhs(state: RadialMetricState, params: FlowParams):
    """Time derivatives (da/dt, db/dt) of the eigenvalue profiles."""
    adot = np.empty_like(state.a)
    bdot = np.empty_like(state.b)
    if params.boundary is Boundary.NO_BOUNDARY_CONSTANT:
        state.validate()
        _constant_mode_rhs(state, adot, bdot)
        return adot, bdot
    bad = _rhs_kernel(
        state.a,
        state.b,
        _coth_table(state),
        state.geom.n,
        state.grid.dr,
        state.geom.hyperbolic,
        adot,
        bdot,
    )
    if bad >= 0:
        raise PositivityLossError(bad, state.t)
    return adot, bdot


# --------------------------------------------------------------------------
# time stepping
# --------------------------------------------------------------------------

def _timestep(state: RadialMetricState, params: FlowParams) -> float:
    if params.dt is not None:
        return params.dt
    if params.boundary is Boundary.NO_BOUNDARY_CONSTANT:
        raise ConfigurationError("constant mode needs an explicit dt")
    floor = float(min(np.min(state.a), np.min(state.b)))
    return params.cfl * state.grid.dr**2 * floor


class _Integrator:
    """RK4 stepping on raw arrays; reuses stage buffers across steps."""

    def __init__(self, state: RadialMetricState, params: FlowParams):
        self.geom = state.geom
        self.grid = state.grid
        self.params = params
        self.dirichlet = params.boundary is Boundary.DIRICHLET
        self.constant = params.boundary is Boundary.NO_BOUNDARY_CONSTANT
        self.c = _coth_table(state)
        shape = state.a.shape
        self.ka = [np.empty(shape) for _ in range(4)]
        self.kb = [np.empty(shape) for _ in range(4)]
        self.wa = np.empty(shape)
        self.wb = np.empty(shape)

    def _eval(self, a, b, t, out_a, out_b):
        if self.constant:
            probe = RadialMetricState(self.geom, self.grid, a, b, t)
            _constant_mode_rhs(probe, out_a, out_b)
            return
        bad = _rhs_kernel(
            a, b, self.c, self.geom.n, self.grid.dr,
            self.geom.hyperbolic, out_a, out_b,
        )
        if bad >= 0:
            raise PositivityLossError(bad, t)

    def advance(self, a, b, t, dt):
        """One RK4 step in place; returns the new time."""
        ka, kb, wa, wb = self.ka, self.kb, self.wa, self.wb
        self._eval(a, b, t, ka[0], kb[0])
        np.multiply(ka[0], 0.5 * dt, out=wa); wa += a
        np.multiply(kb[0], 0.5 * dt, out=wb); wb += b
        self._eval(wa, wb, t + 0.5 * dt, ka[1], kb[1])
        np.multiply(ka[1], 0.5 * dt, out=wa); wa += a
        np.multiply(kb[1], 0.5 * dt, out=wb); wb += b
        self._eval(wa, wb, t + 0.5 * dt, ka[2], kb[2])
        np.multiply(ka[2], dt, out=wa); wa += a
        np.multiply(kb[2], dt, out=wb); wb += b
        self._eval(wa, wb, t + dt, ka[3], kb[3])
        a += (dt / 6.0) * (ka[0] + 2.0 * ka[1] + 2.0 * ka[2] + ka[3])
        b += (dt / 6.0) * (kb[0] + 2.0 * kb[1] + 2.0 * kb[2] + kb[3])
        self._impose(a, b)
        return t + dt

    def _impose(self, a, b):
        if self.dirichlet:
            a[-1] = 1.0
            b[-1] = 1.0
        if not self.constant:
            mid = 0.5 * (a[0] + b[0])
            a[0] = mid
            b[0] = mid


def step(state: RadialMetricState, params: FlowParams) -> RadialMetricState:
    """One explicit RK4 step with the parabolic CFL timestep."""
    state.validate()
    out = state.copy()
    integ = _Integrator(out, params)
    dt = _timestep(state, params)
    out.t = integ.advance(out.a, out.b, out.t, dt)
    eps = max(np.max(np.abs(out.a - 1.0)), np.max(np.abs(out.b - 1.0)))
    if eps > params.eps_abort:
        raise ClosenessAbortError(eps, params.eps_abort, out.t)
    return out


def evolve(
    state: RadialMetricState,
    params: FlowParams,
    sink: Optional[Callable] = None,
    keep_frames: bool = False,
) -> FlowResult:
    """Integrate to ``t_end`` recording diagnostics every ``record_every`` steps.

    ``sink``, when given, receives each :class:`~hypflow.diagnostics.Record`
    as it is produced.  On positivity loss or closeness abort the raised
    error carries the partial series and the last valid state.
    """
    state.validate()
    current = state.copy()
    integ = _Integrator(current, params)
    series = DecaySeries()
    frames = []

    def record():
        grad = frame_first_derivatives(current)
        n = current.geom.n
        max_grad = float(
            np.sqrt(np.max(grad[0] ** 2 + (n - 1) * grad[1] ** 2
                           + 2 * (n - 1) * grad[2] ** 2))
        )
        rec = measure(current, max_grad, params.delta, params.p)
        series.append(rec)
        if keep_frames:
            frames.append(current.copy())
        if sink is not None:
            sink(rec)

    record()
    steps_since_record = 0
    while current.t < params.t_end * (1.0 - 1e-12) - 1e-15:
        dt = min(_timestep(current, params), params.t_end - current.t)
        try:
            current.t = integ.advance(current.a, current.b, current.t, dt)
        except PositivityLossError as err:
            raise PositivityLossError(err.node, err.time, current, series)
        eps = max(np.max(np.abs(current.a - 1.0)),
                  np.max(np.abs(current.b - 1.0)))
        if eps > params.eps_abort:
            raise ClosenessAbortError(
                eps, params.eps_abort, current.t, current, series
            )
        steps_since_record += 1
        if steps_since_record >= params.record_every:
            record()
            steps_since_record = 0
    if steps_since_record > 0:
        record()
    return FlowResult(current, series, frames)


# --------------------------------------------------------------------------
# zeroth-order reaction term
# --------------------------------------------------------------------------

def zeroth_order_term(lams) -> float:
    """S(lambda) = 4 sum (l_i-1)^2 - 4 (sum l_i(l_i-1)) (sum (1 - 1/l_k))."""
    lams = np.asarray(lams, dtype=float)
    if np.any(lams <= 0):
        raise ValueError("eigenvalues must be positive")
    d = lams - 1.0
    return float(4.0 * np.sum(d**2) - 4.0 * np.sum(lams * d) * np.sum(d / lams))
