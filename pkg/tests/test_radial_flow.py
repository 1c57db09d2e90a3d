import math

import numpy as np
import pytest

from hypflow import oracles, profiles, verify
from hypflow.errors import (
    ClosenessAbortError,
    ConfigurationError,
    PositivityLossError,
)
from hypflow.geometry import Background, BackgroundGeometry, RadialGrid
from hypflow.radial_flow import (
    Boundary,
    FlowParams,
    RadialMetricState,
    evolve,
    frame_first_derivatives,
    rhs,
    step,
    zeroth_order_term,
)


def _background_state(geom, grid):
    ones = np.ones(grid.m + 1)
    return RadialMetricState(geom, grid, ones, ones.copy())


class TestFrameDerivatives:
    def test_background_all_zero(self, h4, grid_small):
        da, db, x = frame_first_derivatives(_background_state(h4, grid_small))
        assert np.max(np.abs(da)) == 0.0
        assert np.max(np.abs(db)) == 0.0
        assert np.max(np.abs(x)) == 0.0

    def test_conformal_profile_has_zero_mixed_component(self, h4, grid_small):
        rho = grid_small.nodes
        a = 1.0 + 0.01 * np.exp(-(rho**2))
        state = RadialMetricState(h4, grid_small, a, a.copy())
        _, _, x = frame_first_derivatives(state)
        assert np.max(np.abs(x)) == 0.0

    def test_mixed_component_formula(self, h3, grid_small, rng):
        state = profiles.random_smooth(h3, grid_small, rng)
        _, _, x = frame_first_derivatives(state)
        from hypflow.geometry import warp_log_derivative

        rho = grid_small.nodes[1:]
        expected = warp_log_derivative(h3, rho) * (state.a[1:] - state.b[1:])
        assert np.allclose(x[1:], expected, atol=1e-14)
        assert x[0] == 0.0


class TestRhs:
    @pytest.mark.parametrize("kind", [Background.HYPERBOLIC, Background.EUCLIDEAN])
    @pytest.mark.parametrize("n", [3, 4, 5, 6])
    def test_background_stationary(self, kind, n):
        geom = BackgroundGeometry(kind, n)
        state = _background_state(geom, RadialGrid(3.0, 64))
        adot, bdot = rhs(state, FlowParams())
        assert np.max(np.abs(adot)) <= 1e-13
        assert np.max(np.abs(bdot)) <= 1e-13

    def test_constant_mode_ode(self, h4, grid_small):
        state = profiles.constant(h4, grid_small, 1.05)
        params = FlowParams(boundary=Boundary.NO_BOUNDARY_CONSTANT, dt=1e-3)
        adot, bdot = rhs(state, params)
        expected = 2.0 * 3 * (1.0 - 1.05)
        assert np.allclose(adot, expected, atol=1e-14)
        assert np.allclose(bdot, expected, atol=1e-14)

    def test_euclidean_constant_is_fixed_point(self, e4, grid_small):
        state = profiles.constant(e4, grid_small, 1.3)
        params = FlowParams(boundary=Boundary.NO_BOUNDARY_CONSTANT, dt=1e-3)
        adot, bdot = rhs(state, params)
        assert np.max(np.abs(adot)) == 0.0
        assert np.max(np.abs(bdot)) == 0.0

    def test_positivity_error_carries_node(self, h4, grid_small):
        a = np.ones(grid_small.m + 1)
        a[3] = -0.5
        state = RadialMetricState(h4, grid_small, a, np.ones(grid_small.m + 1))
        with pytest.raises(PositivityLossError) as err:
            rhs(state, FlowParams())
        assert err.value.node == 3

    def test_constant_mode_rejects_nonconstant(self, h4, grid_small):
        state = profiles.bump(h4, grid_small, 0.01)
        params = FlowParams(boundary=Boundary.NO_BOUNDARY_CONSTANT, dt=1e-3)
        with pytest.raises(ConfigurationError):
            rhs(state, params)

    def test_frame_reduction_matches_coordinate_oracle(self, rng):
        result = verify.check_frame_reduction(rng, profiles=4)
        assert result.passed, result.detail


class TestStep:
    def test_background_fixed(self, h4, grid_small):
        state = _background_state(h4, grid_small)
        out = step(state, FlowParams())
        assert np.max(np.abs(out.a - 1.0)) <= 1e-14
        assert np.max(np.abs(out.b - 1.0)) <= 1e-14
        assert out.t > 0

    def test_local_order(self, h4):
        # two steps at dt vs one at 2dt differ by O(dt^5) locally
        grid = RadialGrid(3.0, 60)
        base = profiles.bump(h4, grid, 0.05)

        def local_diff(dt):
            one = step(base, FlowParams(dt=2 * dt))
            two = step(step(base, FlowParams(dt=dt)), FlowParams(dt=dt))
            return max(
                np.max(np.abs(one.a - two.a)), np.max(np.abs(one.b - two.b))
            )

        d1 = local_diff(2e-4)
        d2 = local_diff(1e-4)
        order = math.log2(d1 / d2)
        assert order >= 3.8

    def test_constant_mode_closed_form(self, h4, grid_small):
        state = profiles.constant(h4, grid_small, 1.05)
        params = FlowParams(
            boundary=Boundary.NO_BOUNDARY_CONSTANT, dt=1e-3, t_end=0.5,
            record_every=100,
        )
        result = evolve(state, params)
        expected = 1.0 + 0.05 * math.exp(-3.0)
        assert expected == pytest.approx(1.0024894, abs=1e-7)
        assert result.state.a[0] == pytest.approx(expected, rel=1e-9)

    def test_dirichlet_and_origin_preserved(self, h4, grid_small):
        state = profiles.aniso(h4, grid_small, 0.05)
        current = state
        for _ in range(20):
            current = step(current, FlowParams())
            assert current.a[-1] == 1.0
            assert current.b[-1] == 1.0
            assert abs(current.a[0] - current.b[0]) <= 1e-12

    def test_closeness_abort(self, h4, grid_small):
        state = profiles.bump(h4, grid_small, 0.3)
        with pytest.raises(ClosenessAbortError):
            step(state, FlowParams(eps_abort=0.05))


class TestEvolve:
    def test_zero_time(self, h4, grid_small):
        state = profiles.bump(h4, grid_small, 0.01)
        result = evolve(state, FlowParams(t_end=0.0))
        assert len(result.series) == 1
        assert np.array_equal(result.state.a, state.a)
        assert result.state.t == 0.0

    def test_lyapunov_strictly_decreasing(self, h4):
        grid = RadialGrid(6.0, 120)
        state = profiles.bump(h4, grid, 0.01)
        result = evolve(state, FlowParams(t_end=0.3, record_every=20))
        values = result.series.column("I_L2")
        assert len(values) >= 5
        assert np.all(np.diff(values) < 0)

    def test_constant_mode_matches_closed_form_at_records(self, h4, grid_small):
        state = profiles.constant(h4, grid_small, 1.05)
        params = FlowParams(
            boundary=Boundary.NO_BOUNDARY_CONSTANT, dt=1e-4, t_end=1.0,
            record_every=1000,
        )
        result = evolve(state, params)
        for rec in result.series.records:
            expected = 0.05 * math.exp(-6.0 * rec.t)
            assert rec.closeness == pytest.approx(expected, abs=1e-6)

    def test_hyperbolic_constant_contracts_monotonically(self, h4, grid_small):
        state = profiles.constant(h4, grid_small, 1.2)
        params = FlowParams(
            boundary=Boundary.NO_BOUNDARY_CONSTANT, dt=1e-3, t_end=1.0,
            record_every=50,
        )
        result = evolve(state, params)
        closeness = result.series.column("closeness")
        assert np.all(np.diff(closeness) < 0)

    def test_abort_carries_partial_series(self, h4, grid_small):
        state = profiles.bump(h4, grid_small, 0.2)
        params = FlowParams(eps_abort=0.1, t_end=1.0, record_every=1)
        with pytest.raises(ClosenessAbortError) as err:
            evolve(state, params)
        assert err.value.series is not None
        assert len(err.value.series) >= 1

    def test_sink_receives_records(self, h4, grid_small):
        state = profiles.bump(h4, grid_small, 0.01)
        seen = []
        result = evolve(
            state, FlowParams(t_end=0.05, record_every=10), sink=seen.append
        )
        assert len(seen) == len(result.series)


class TestZerothOrderTerm:
    def test_background(self):
        assert zeroth_order_term([1.0, 1.0, 1.0, 1.0]) == 0.0

    def test_single_eigenvalue_cancels(self):
        assert zeroth_order_term([1.1, 1.0, 1.0, 1.0]) == pytest.approx(0.0, abs=1e-14)

    def test_known_value(self):
        assert zeroth_order_term([1.2, 0.9, 1.0, 1.0]) == pytest.approx(
            0.1666667, abs=1e-7
        )

    def test_domain_error(self):
        with pytest.raises(ValueError):
            zeroth_order_term([1.0, -0.5])

    def test_lemma_inequality(self, rng):
        result = verify.check_zeroth_order(rng, samples=300)
        assert result.passed, result.detail


class TestParams:
    def test_cfl_range(self):
        with pytest.raises(ConfigurationError):
            FlowParams(cfl=0.6)
        with pytest.raises(ConfigurationError):
            FlowParams(cfl=0.0)

    def test_eps_abort_range(self):
        with pytest.raises(ConfigurationError):
            FlowParams(eps_abort=1.5)

    def test_constant_mode_needs_dt(self, h4, grid_small):
        state = profiles.constant(h4, grid_small, 1.05)
        params = FlowParams(boundary=Boundary.NO_BOUNDARY_CONSTANT)
        with pytest.raises(ConfigurationError):
            step(state, params)


class TestRicciOracleConsistency:
    def test_closed_form_matches_symbolic_n3(self, h3, rng):
        # closed-form radial Ricci vs the coordinate-curvature reference
        profile = oracles.random_profile(rng, 3.0)
        rho = np.linspace(0.3, 2.7, 25)
        args = (
            rho,
            profile["a"](rho), profile["a1"](rho), profile["a2"](rho),
            profile["b"](rho), profile["b1"](rho), profile["b2"](rho),
        )
        ric_r, ric_ang = oracles.ricci_frame_components(3, True, *args)
        ref_r, ref_ang = oracles.reference_ricci_n3(True, *args)
        assert np.allclose(ric_r, ref_r, atol=1e-10)
        assert np.allclose(ric_ang, ref_ang, atol=1e-10)

    def test_background_ricci(self, h3):
        rho = np.linspace(0.5, 2.5, 10)
        ones = np.ones_like(rho)
        zeros = np.zeros_like(rho)
        ric_r, ric_ang = oracles.ricci_frame_components(
            3, True, rho, ones, zeros, zeros, ones, zeros, zeros
        )
        # Ric(h) = -(n-1) h for the hyperbolic background
        assert np.allclose(ric_r, -2.0, atol=1e-12)
        assert np.allclose(ric_ang, -2.0, atol=1e-12)
