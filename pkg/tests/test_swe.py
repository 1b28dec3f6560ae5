import numpy as np
import pytest

from rons import core, fv, swe
from rons.errors import (
    DryStateError,
    ResampledInitialConditionWarning,
    ValidationError,
)


class TestConfig:
    def test_derived_constants(self):
        # oracle: arithmetic on the characteristic scales
        config = swe.SweConfig()
        assert config.gravity == pytest.approx(9.8 * 2.13e6 / 198.0**2)
        assert config.gravity == pytest.approx(532.4457, rel=1e-6)
        assert config.mean_depth == pytest.approx(4000.0 / 2.13e6)
        # nondimensionalization puts the rest-state wave speed at ~1
        assert np.sqrt(config.gravity * config.mean_depth) == pytest.approx(1.0, abs=1e-4)

    def test_limiter_parameter_range(self):
        with pytest.raises(ValidationError):
            swe.SweConfig(limiter_theta=2.5)

    def test_bottom_must_stay_below_surface(self):
        config = swe.SweConfig(bottom=lambda x: np.full_like(x, 1.0))
        with pytest.raises(ValidationError):
            config.depth_at(np.array([0.0]))


class TestPhysicalFlux:
    def test_rest_state(self):
        assert swe.swe_physical_flux(0.0, 0.0, 2.0, 532.4) == (0.0, 0.0)

    def test_direct_substitution(self):
        f1, f2 = swe.swe_physical_flux(0.0, 1.0, 2.0, 532.4)
        assert f1 == pytest.approx(2.0)
        assert f2 == pytest.approx(0.5)

    def test_dry_state_rejected(self):
        with pytest.raises(DryStateError):
            swe.swe_physical_flux(-3.0, 0.0, 2.0, 532.4)


class TestEigenvalues:
    def test_rest_state_unit_speed(self):
        config = swe.SweConfig()
        lam1, lam2 = swe.swe_eigenvalues(0.0, 0.0, config.mean_depth, config.gravity)
        assert lam1 == pytest.approx(0.99995, abs=1e-4)
        assert lam2 == pytest.approx(-lam1)

    def test_degenerate_depth(self):
        lam1, lam2 = swe.swe_eigenvalues(0.0, 0.5, 0.0, 532.4)
        assert lam1 == lam2 == 0.5

    def test_ordering(self, rng):
        config = swe.SweConfig()
        eta = 1e-4 * rng.standard_normal(50)
        v = 1e-2 * rng.standard_normal(50)
        lam1, lam2 = swe.swe_eigenvalues(eta, v, config.mean_depth, config.gravity)
        assert np.all(lam1 >= lam2)


class TestCflStep:
    def test_rest_state_step(self):
        config = swe.SweConfig()
        grid = fv.build_grid(10.0, 1024)
        dt = swe.swe_cfl_dt(swe.lake_at_rest_ic(grid), grid, config)
        # oracle: dx / (2 sqrt(g D)) with the derived constants
        expected = (10.0 / 1024) / (2.0 * np.sqrt(config.gravity * config.mean_depth))
        assert dt == pytest.approx(expected)
        assert dt == pytest.approx(0.004883, rel=1e-3)

    def test_speed_doubling_halves_dt(self):
        config = swe.SweConfig()
        grid = fv.build_grid(10.0, 64)
        U = swe.lake_at_rest_ic(grid)
        dt0 = swe.swe_cfl_dt(U, grid, config)
        # quadruple gravity doubles the characteristic speed
        config4 = swe.SweConfig(gravity=4.0 * config.gravity)
        assert swe.swe_cfl_dt(U, grid, config4) == pytest.approx(dt0 / 2.0)

    def test_zero_speed_fallback(self):
        config = swe.SweConfig(gravity=1.0, mean_depth=0.0, fallback_dt=0.125)
        grid = fv.build_grid(10.0, 64)
        assert swe.swe_cfl_dt(np.zeros((2, 64)), grid, config) == 0.125


class TestMinmod:
    def test_uniform_linear_data(self):
        dx = 0.1
        values = np.arange(8.0) * dx  # slope exactly 1 per unit x
        slopes = swe.minmod_reconstruct(values, 1.2, dx)
        # periodic wrap corrupts the two boundary cells only
        assert np.allclose(slopes[1:-1], 1.0)

    def test_extremum_gets_zero_slope(self):
        values = np.array([0.0, 0.0, 1.0, 0.0, 0.0])
        slopes = swe.minmod_reconstruct(values, 1.2, 0.1)
        assert slopes[2] == 0.0

    def test_constant_data(self):
        assert not swe.minmod_reconstruct(np.full(6, 2.5), 1.2, 0.1).any()

    def test_interface_values_stay_in_stencil_range(self, rng):
        # TVD property of the limited reconstruction
        dx = 0.05
        values = rng.standard_normal(64)
        slopes = swe.minmod_reconstruct(values, 1.2, dx)
        left = values - 0.5 * dx * slopes
        right = values + 0.5 * dx * slopes
        lo = np.minimum(np.minimum(np.roll(values, 1), values), np.roll(values, -1))
        hi = np.maximum(np.maximum(np.roll(values, 1), values), np.roll(values, -1))
        assert np.all(left >= lo - 1e-12) and np.all(left <= hi + 1e-12)
        assert np.all(right >= lo - 1e-12) and np.all(right <= hi + 1e-12)


class TestCentralUpwindFlux:
    def test_consistency_equal_states(self, rng):
        config = swe.SweConfig()
        eta = 1e-4 * rng.standard_normal(16)
        v = 1e-2 * rng.standard_normal(16)
        depth = np.full(16, config.mean_depth)
        flux = np.stack(swe.swe_physical_flux(eta, v, depth, config.gravity))
        lam1, lam2 = swe.swe_eigenvalues(eta, v, depth, config.gravity)
        a_plus = np.maximum(lam1, 0.0)
        a_minus = np.minimum(lam2, 0.0)
        state = np.stack([eta, v])
        out = swe.central_upwind_interface_flux(flux, flux, state, state, a_plus, a_minus)
        assert np.allclose(out, flux, atol=1e-18)

    def test_rest_interface_zero_flux(self):
        config = swe.SweConfig()
        zero = np.zeros(4)
        flux = np.stack(
            swe.swe_physical_flux(zero, zero, config.mean_depth, config.gravity)
        )
        lam1, lam2 = swe.swe_eigenvalues(zero, zero, config.mean_depth, config.gravity)
        out = swe.central_upwind_interface_flux(
            flux, flux, np.zeros((2, 4)), np.zeros((2, 4)),
            np.maximum(lam1, 0), np.minimum(lam2, 0),
        )
        assert not out.any()

    def test_reduces_to_upwind_for_linear_advection(self, rng):
        # oracle: for G(u) = c u with c > 0 both one-sided speeds are c and 0,
        # and the formula collapses to H = c * u_left
        c = 2.0
        u_left = rng.standard_normal(8)
        u_right = rng.standard_normal(8)
        out = swe.central_upwind_interface_flux(
            c * u_left, c * u_right, u_left, u_right,
            np.full(8, c), np.zeros(8),
        )
        assert np.allclose(out, c * u_left)

    def test_degenerate_speeds_use_mean(self):
        out = swe.central_upwind_interface_flux(
            np.array([2.0]), np.array([4.0]), np.array([1.0]), np.array([5.0]),
            np.zeros(1), np.zeros(1),
        )
        assert out[0] == 3.0


class TestInvariants:
    def test_lake_at_rest_values(self):
        config = swe.SweConfig()
        grid = fv.build_grid(10.0, 64)
        values, grads = swe.swe_invariants(swe.lake_at_rest_ic(grid), grid, config)
        assert np.allclose(values, 0.0)
        assert not grads[2].any()

    def test_constant_state_closed_form(self):
        # eta = c, v = 0 on [0, 10]: I1 = 10 c, I2 = 0, I3 = 5 g c^2
        config = swe.SweConfig()
        grid = fv.build_grid(10.0, 256)
        c = 3e-7
        U = np.stack([np.full(256, c), np.zeros(256)])
        values, _ = swe.swe_invariants(U, grid, config)
        assert values[0] == pytest.approx(10 * c)
        assert values[1] == 0.0
        assert values[2] == pytest.approx(5 * config.gravity * c**2)

    def test_gradients_match_finite_differences(self, rng):
        config = swe.SweConfig()
        grid = fv.build_grid(10.0, 12)
        quantities = swe.swe_quantities(grid, config)
        for _ in range(5):
            a = rng.standard_normal(24)
            for q in quantities:
                fd = core.finite_difference_gradient(q.value, a)
                g = q.gradient(a)
                assert np.max(np.abs(g - fd)) <= 1e-6 * max(1.0, np.max(np.abs(fd)))


class TestInitialConditions:
    def test_gaussian_peak_amplitude(self):
        # oracle: 0.1 / 2.13e6 = 4.695e-8, sampled at the cell center nearest
        # the domain midpoint (half a cell away at this resolution)
        config = swe.SweConfig()
        grid = fv.build_grid(10.0, 1024)
        U = swe.gaussian_pulse_ic(grid, config)
        nearest = grid.centers[np.argmax(U[0])]
        expected = (0.1 / 2.13e6) * np.exp(-((5.0 * (nearest - 5.0)) ** 2))
        assert np.max(U[0]) == pytest.approx(expected, rel=1e-12)
        assert np.max(U[0]) == pytest.approx(4.695e-8, rel=1e-3)

    def test_gaussian_vanishes_at_boundary(self):
        # exp(-623.7) is ~1e-271, below any physically visible level
        config = swe.SweConfig()
        grid = fv.build_grid(10.0, 1024)
        U = swe.gaussian_pulse_ic(grid, config)
        assert abs(U[0][0]) < 1e-250

    def test_gaussian_fluid_at_rest(self):
        config = swe.SweConfig()
        grid = fv.build_grid(10.0, 64)
        assert not swe.gaussian_pulse_ic(grid, config)[1].any()

    def test_random_ic_no_velocity(self):
        config = swe.SweConfig()
        grid = fv.build_grid(10.0, 256)
        assert not swe.random_oscillatory_ic(5, grid, config)[1].any()

    def test_random_ic_normalization(self):
        # grid maximum equals 1 / (2 wavelength) by construction
        config = swe.SweConfig()
        grid = fv.build_grid(10.0, 512)
        for seed in (0, 7, 19):
            U = swe.random_oscillatory_ic(seed, grid, config)
            assert np.max(U[0]) == pytest.approx(1.0 / (2.0 * config.wavelength_m), rel=1e-12)

    def test_random_ic_deterministic(self):
        config = swe.SweConfig()
        grid = fv.build_grid(10.0, 128)
        a = swe.random_oscillatory_ic(11, grid, config)
        b = swe.random_oscillatory_ic(11, grid, config)
        assert np.array_equal(a, b)


class TestWellBalanced:
    def test_lake_at_rest_survives_integration(self):
        from rons.integrators import StepSchedule, integrate, step_ssprk3

        config = swe.SweConfig()
        grid = fv.build_grid(10.0, 128)
        scheme = swe.central_upwind_scheme(config)
        quantities = swe.swe_quantities(grid, config)
        schedule = StepSchedule(t_final=1.0, cfl=lambda U: scheme.cfl_dt(U, grid))
        for constraints in ((), quantities):
            rhs = lambda U: fv.fvrons_rhs(U, scheme, grid, constraints)
            traj = integrate(rhs, swe.lake_at_rest_ic(grid), schedule,
                             stepper=step_ssprk3, observe_every=1.0)
            assert np.max(np.abs(traj.states[-1])) <= 1e-12
