"""Property suites: randomized and exact checks of the core invariants.

Each check returns a :class:`SuiteResult`; :func:`run_all` executes the
whole battery with a seeded generator so results are reproducible.  The
CLI `verify` command and the acceptance tests both run through here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import oracles
from .diagnostics import interpolation_check, kato_residual
from .gauge import TimeMap, deturck_field
from .geometry import Background, BackgroundGeometry, RadialGrid
from .profiles import random_smooth
from .radial_flow import FlowParams, RadialMetricState, rhs, zeroth_order_term

__all__ = [
    "SuiteResult",
    "check_fixed_point",
    "check_kato",
    "check_interpolation",
    "check_zeroth_order",
    "check_frame_reduction",
    "check_time_maps",
    "run_all",
]

_BACKGROUNDS = (Background.HYPERBOLIC, Background.EUCLIDEAN)


@dataclass(frozen=True)
class SuiteResult:
    name: str
    passed: bool
    value: float
    threshold: float
    detail: str

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"{mark} {self.name}: {self.detail}"


def check_fixed_point(tol: float = 1e-13) -> SuiteResult:
    """The background metric is a fixed point: rhs(h) = 0 and V(h) = 0."""
    worst = 0.0
    params = FlowParams()
    for kind in _BACKGROUNDS:
        for n in range(3, 7):
            geom = BackgroundGeometry(kind, n)
            grid = RadialGrid(3.0, 64)
            ones = np.ones(grid.m + 1)
            state = RadialMetricState(geom, grid, ones, ones.copy())
            adot, bdot = rhs(state, params)
            worst = max(
                worst,
                float(np.max(np.abs(adot))),
                float(np.max(np.abs(bdot))),
                float(np.max(np.abs(deturck_field(state)))),
            )
    return SuiteResult(
        "fixed-point", worst <= tol, worst, tol,
        f"max |rhs(h)|, |V(h)| = {worst:.3e} (tol {tol:g})",
    )


def check_kato(rng, samples: int = 1000, tol: float = 1e-10) -> SuiteResult:
    """Discrete Kato inequality on random states: |grad|Z||^2 <= |grad Z|^2."""
    worst = -np.inf
    for _ in range(samples):
        kind = _BACKGROUNDS[int(rng.integers(2))]
        n = int(rng.integers(2, 7))
        geom = BackgroundGeometry(kind, n)
        grid = RadialGrid(float(rng.uniform(2.0, 6.0)), 64)
        state = random_smooth(geom, grid, rng, amplitude=float(rng.uniform(0.01, 0.2)))
        worst = max(worst, kato_residual(state))
    return SuiteResult(
        "kato", worst <= tol, worst, tol,
        f"max residual over {samples} states = {worst:.3e} (tol {tol:g})",
    )


def check_interpolation(rng, samples: int = 200) -> SuiteResult:
    """||Du||^2 <= 32 ||u|| ||D^2 u|| on band-limited random functions."""
    x = np.linspace(0.0, 2.0 * np.pi, 4097)
    worst = 0.0
    for _ in range(samples):
        modes = int(rng.integers(1, 9))
        c0 = rng.uniform(-1.0, 1.0)
        u = np.full_like(x, c0)
        du = np.zeros_like(x)
        d2u = np.zeros_like(x)
        for k in range(1, modes + 1):
            ck, sk = rng.uniform(-1.0, 1.0, 2)
            u += ck * np.cos(k * x) + sk * np.sin(k * x)
            du += k * (-ck * np.sin(k * x) + sk * np.cos(k * x))
            d2u += k * k * (-ck * np.cos(k * x) - sk * np.sin(k * x))
        worst = max(worst, interpolation_check(u, du, d2u))
    return SuiteResult(
        "interpolation", worst == 0.0, worst, 0.0,
        f"max violation over {samples} functions = {worst:.3e} (must be 0)",
    )


def check_zeroth_order(rng, samples: int = 1000) -> SuiteResult:
    """S(lambda) <= 4 sum d^2 - 4 (sum d)^2 + 8n eps sum d^2 for eps <= 0.1.

    d_i = lambda_i - 1 and eps = max |d_i|; 8n is the dimensional
    constant of the bound.
    """
    worst = -np.inf
    for _ in range(samples):
        n = int(rng.integers(2, 7))
        eps_cap = float(rng.uniform(1e-4, 0.1))
        lams = rng.uniform(1.0 / (1.0 + eps_cap), 1.0 + eps_cap, n)
        d = lams - 1.0
        eps = float(np.max(np.abs(d)))
        sum_sq = float(np.sum(d**2))
        bound = 4.0 * sum_sq - 4.0 * float(np.sum(d)) ** 2 + 8.0 * n * eps * sum_sq
        worst = max(worst, zeroth_order_term(lams) - bound)
    return SuiteResult(
        "zeroth-order", worst <= 0.0, worst, 0.0,
        f"max S - bound over {samples} tuples = {worst:.3e} (<= 0)",
    )


def _frame_reduction_error(geom, profile, R: float, m: int) -> float:
    grid = RadialGrid(R, m)
    rho = grid.nodes
    state = RadialMetricState(geom, grid, profile["a"](rho), profile["b"](rho))
    adot, bdot = rhs(state, FlowParams())
    ri = rho[1:-1]
    ref_a, ref_b = oracles.reference_rhs_n3(
        geom.hyperbolic, ri,
        profile["a"](ri), profile["a1"](ri), profile["a2"](ri),
        profile["b"](ri), profile["b1"](ri), profile["b2"](ri),
    )
    return max(
        float(np.max(np.abs(adot[1:-1] - ref_a))),
        float(np.max(np.abs(bdot[1:-1] - ref_b))),
    )


def check_frame_reduction(
    rng, profiles: int = 10, min_order: float = 1.9
) -> SuiteResult:
    """Frame-reduced rhs vs the coordinate-Christoffel oracle at n = 3.

    The discretization must converge to the independent continuum
    reference at second order under grid doubling.
    """
    R = 3.0
    worst_order = np.inf
    for i in range(profiles):
        kind = _BACKGROUNDS[i % 2]
        geom = BackgroundGeometry(kind, 3)
        profile = oracles.random_profile(rng, R)
        e_coarse = _frame_reduction_error(geom, profile, R, 64)
        e_fine = _frame_reduction_error(geom, profile, R, 128)
        order = np.log2(e_coarse / e_fine)
        worst_order = min(worst_order, order)
    return SuiteResult(
        "frame-reduction", worst_order >= min_order, worst_order, min_order,
        f"min observed order over {profiles} profiles = {worst_order:.3f} "
        f"(need >= {min_order:g})",
    )


def check_time_maps(rng, samples: int = 100, tol: float = 1e-14) -> SuiteResult:
    """Round trips of the bare/normalized time maps."""
    worst = 0.0
    for n in range(2, 7):
        tm = TimeMap(n)
        t = rng.uniform(0.0, 10.0, samples)
        back = tm.from_scaled(tm.to_scaled(t))
        worst = max(worst, float(np.max(np.abs(back - t) / np.maximum(1.0, t))))
        ts = rng.uniform(0.0, 2.0, samples)
        back = tm.to_scaled(tm.from_scaled(ts))
        worst = max(worst, float(np.max(np.abs(back - ts) / np.maximum(1.0, ts))))
    return SuiteResult(
        "time-maps", worst <= tol, worst, tol,
        f"max relative round-trip error = {worst:.3e} (tol {tol:g})",
    )


def run_all(seed: int = 0) -> list:
    """Run every property suite with a seeded generator."""
    rng = np.random.default_rng(seed)
    return [
        check_fixed_point(),
        check_kato(rng),
        check_interpolation(rng),
        check_zeroth_order(rng),
        check_frame_reduction(rng),
        check_time_maps(rng),
    ]
