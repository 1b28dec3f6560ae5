import numpy as np
import pytest

from rons import core, nls
from rons.errors import AlignmentError, RankError, ValidationError

LENGTH = 16.0 * np.pi
N_GRID = 64


def plane_wave(amplitude, wavenumber_index, n=N_GRID, length=LENGTH):
    x = np.arange(n) * (length / n)
    k = 2.0 * np.pi * wavenumber_index / length
    return amplitude * np.exp(1j * k * x), k


def fourier_basis(n_modes, n=N_GRID, length=LENGTH):
    """Orthonormal Fourier modes as a basis container (zero mean)."""
    x = np.arange(n) * (length / n)
    ks = [2.0 * np.pi * m / length for m in range(-(n_modes // 2), n_modes - n_modes // 2)]
    modes = np.stack([np.exp(1j * k * x) / np.sqrt(length) for k in ks])
    return nls.PodBasis(
        mean=np.zeros(n, dtype=complex),
        modes=modes,
        mode_derivatives=np.stack([nls.spectral_derivative(m, length) for m in modes]),
        mean_derivative=np.zeros(n, dtype=complex),
        length=length,
        singular_values=np.ones(n_modes),
    )


class TestSpectralField:
    def test_parseval(self, rng):
        u = rng.standard_normal(N_GRID) + 1j * rng.standard_normal(N_GRID)
        field = nls.SpectralField.from_values(u, LENGTH)
        dx = LENGTH / N_GRID
        grid_side = dx * np.sum(np.abs(u) ** 2)
        spectral_side = (LENGTH / N_GRID**2) * np.sum(np.abs(field.coefficients) ** 2)
        assert grid_side == pytest.approx(spectral_side, rel=1e-10)

    def test_roundtrip(self, rng):
        u = rng.standard_normal(N_GRID) + 1j * rng.standard_normal(N_GRID)
        assert np.allclose(nls.SpectralField.from_values(u, LENGTH).values(), u)


class TestRhs:
    def test_zero_field(self):
        field = nls.SpectralField.from_values(np.zeros(N_GRID), LENGTH)
        assert not nls.nls_rhs(field).values().any()

    def test_plane_wave_exact_nonlinear_mode(self):
        # oracle: substituting A e^{ikx} into the PDE gives the multiplier
        # -ik/2 + i k^2 / 8 - i |A|^2 / 2
        u, k = plane_wave(0.3, 5)
        rhs = nls.nls_rhs(nls.SpectralField.from_values(u, LENGTH)).values()
        expected = (-0.5j * k + 0.125j * k * k - 0.5j * 0.3**2) * u
        assert np.max(np.abs(rhs - expected)) < 1e-14

    def test_mass_rate_vanishes(self, rng):
        # d/dt of the discrete mass is 2 Re <u, u_t>, zero for this operator
        u = 0.1 * (rng.standard_normal(N_GRID) + 1j * rng.standard_normal(N_GRID))
        rhs = nls.nls_rhs_values(u, LENGTH)
        dx = LENGTH / N_GRID
        rate = 2.0 * dx * np.sum(np.real(np.conj(u) * rhs))
        assert abs(rate) < 1e-10 * max(1.0, dx * np.sum(np.abs(u) ** 2))

    def test_grid_and_spectral_paths_agree(self, rng):
        u = 0.2 * (rng.standard_normal(N_GRID) + 1j * rng.standard_normal(N_GRID))
        via_values = nls.nls_rhs_values(u, LENGTH)
        via_spectrum = nls.nls_rhs(nls.SpectralField.from_values(u, LENGTH)).values()
        assert np.max(np.abs(via_values - via_spectrum)) < 1e-13


class TestRandomIc:
    def test_component_amplitudes(self):
        # six cosine components j = 3..8 with amplitudes exp(-j^2/10)
        field = nls.nls_random_ic(3, LENGTH, 256)
        spec = np.abs(np.fft.fft(field.values())) / 256
        present = {j for j in range(1, 12) if spec[j] > 1e-12}
        assert present == {3, 4, 5, 6, 7, 8}

    def test_peak_amplitude(self):
        field = nls.nls_random_ic(4, LENGTH, 256)
        assert np.max(field.values().real) == pytest.approx(0.13, rel=1e-12)

    def test_deterministic(self):
        a = nls.nls_random_ic(9, LENGTH, 128).values()
        b = nls.nls_random_ic(9, LENGTH, 128).values()
        assert np.array_equal(a, b)


class TestDnsRun:
    def test_zero_ic_stays_zero(self):
        ic = nls.SpectralField.from_values(np.zeros(N_GRID), LENGTH)
        series, diag = nls.dns_run(ic, 1.0, 0.5)
        assert not series.snapshots.any()

    def test_plane_wave_modulus_constant(self):
        u, _ = plane_wave(0.1, 3)
        series, _ = nls.dns_run(nls.SpectralField.from_values(u, LENGTH), 2.0, 0.5)
        mods = np.abs(series.snapshots)
        assert np.max(np.abs(mods - 0.1)) < 1e-10

    def test_invariant_drift_small(self):
        ic = nls.nls_random_ic(2, LENGTH, N_GRID)
        _, diag = nls.dns_run(ic, 5.0, 1.0)
        assert diag["mass_drift"] < 1e-8
        assert diag["energy_drift"] < 1e-8


class TestPod:
    def test_rank_zero_after_centering(self):
        snaps = np.tile(np.exp(1j * np.arange(N_GRID)), (6, 1))
        with pytest.raises(RankError):
            nls.compute_pod(snaps, 1, LENGTH)

    def test_two_field_span_recovery(self, rng):
        # oracle: synthetic snapshots built from two orthogonal fields must be
        # reproduced by a rank-2 basis with negligible projection residual
        x = np.arange(N_GRID) * (LENGTH / N_GRID)
        f1 = np.exp(2j * np.pi * x / LENGTH)
        f2 = np.exp(-4j * np.pi * x / LENGTH)
        coeffs = rng.standard_normal((12, 2))
        snaps = coeffs[:, :1] * f1 + coeffs[:, 1:] * f2
        basis = nls.compute_pod(snaps, 2, LENGTH)
        for snap in snaps:
            recon = basis.reconstruct(basis.project(snap - basis.mean))
            assert np.max(np.abs(recon - snap)) < 1e-10

    def test_modes_orthonormal(self, rng):
        snaps = 0.1 * (rng.standard_normal((30, N_GRID)) + 1j * rng.standard_normal((30, N_GRID)))
        basis = nls.compute_pod(snaps, 5, LENGTH)
        gram = basis.dx * (basis.modes.conj() @ basis.modes.T)
        assert np.max(np.abs(gram - np.eye(5))) < 1e-8

    def test_too_few_snapshots(self):
        with pytest.raises(RankError):
            nls.compute_pod(np.zeros((3, N_GRID), dtype=complex), 5, LENGTH)


class TestProjectIc:
    def test_mean_projects_to_zero(self, rng):
        snaps = 0.1 * (rng.standard_normal((20, N_GRID)) + 1j * rng.standard_normal((20, N_GRID)))
        basis = nls.compute_pod(snaps, 3, LENGTH)
        state = nls.project_ic(basis.mean.copy(), basis)
        assert np.max(np.abs(state.values)) < 1e-12

    def test_single_mode_recovered(self, rng):
        snaps = 0.1 * (rng.standard_normal((20, N_GRID)) + 1j * rng.standard_normal((20, N_GRID)))
        basis = nls.compute_pod(snaps, 3, LENGTH)
        state = nls.project_ic(basis.mean + basis.modes[0], basis)
        z = basis.layout.unpack(state.values)[0]
        assert np.allclose(z, [1.0, 0.0, 0.0], atol=1e-10)

    def test_reconstruction_error_is_orthogonal_complement(self, rng):
        # Pythagoras under the discrete inner product
        snaps = 0.1 * (rng.standard_normal((20, N_GRID)) + 1j * rng.standard_normal((20, N_GRID)))
        basis = nls.compute_pod(snaps, 4, LENGTH)
        u0 = 0.1 * (rng.standard_normal(N_GRID) + 1j * rng.standard_normal(N_GRID))
        state = nls.project_ic(u0, basis)
        recon = basis.reconstruct_state(state)
        dx = basis.dx
        total = dx * np.sum(np.abs(u0 - basis.mean) ** 2)
        # projection coefficients already carry the dx weight
        captured = np.sum(np.abs(basis.project(u0 - basis.mean)) ** 2)
        residual = dx * np.sum(np.abs(u0 - recon) ** 2)
        assert residual == pytest.approx(total - captured, rel=1e-9)


class TestRomInvariants:
    def test_constant_field_closed_form(self):
        # u = c: mass |c|^2 L, energy -|c|^4 L / 4
        basis = fourier_basis(3)
        c = 0.2 - 0.1j
        # constant field is the k=0 mode scaled by sqrt(L)
        z = np.zeros(3, dtype=complex)
        z[1] = c * np.sqrt(LENGTH)  # ks = [-1, 0, 1] ordering puts k=0 second
        a = basis.layout.pack([z])
        values, _ = nls.nls_invariants(a, basis)
        assert values[0] == pytest.approx(abs(c) ** 2 * LENGTH, rel=1e-12)
        assert values[1] == pytest.approx(-0.25 * abs(c) ** 4 * LENGTH, rel=1e-12)

    def test_plane_wave_closed_form(self):
        basis = fourier_basis(5)
        amplitude = 0.3
        k = 2.0 * np.pi * 2 / LENGTH  # ks = [-2,-1,0,1,2]; index 4 is k=+2
        z = np.zeros(5, dtype=complex)
        z[4] = amplitude * np.sqrt(LENGTH)
        a = basis.layout.pack([z])
        values, _ = nls.nls_invariants(a, basis)
        assert values[0] == pytest.approx(amplitude**2 * LENGTH, rel=1e-12)
        assert values[1] == pytest.approx(
            (k**2 * amplitude**2 / 8.0 - amplitude**4 / 4.0) * LENGTH, rel=1e-12
        )

    def test_gradients_match_finite_differences(self, rng):
        snaps = 0.1 * (rng.standard_normal((20, N_GRID)) + 1j * rng.standard_normal((20, N_GRID)))
        basis = nls.compute_pod(snaps, 4, LENGTH)
        for q in nls.rom_quantities(basis):
            for _ in range(5):
                a = 0.5 * rng.standard_normal(8)
                fd = core.finite_difference_gradient(q.value, a)
                g = q.gradient(a)
                assert np.max(np.abs(g - fd)) <= 1e-6 * max(1.0, np.max(np.abs(fd)))


class TestRomRhs:
    def test_unconstrained_equals_degenerate_constraint_state(self):
        basis = fourier_basis(3)
        zero_q = core.ConservedQuantity("null", lambda a: 0.0, lambda a: np.zeros_like(a))
        a = np.zeros(6)
        a[0] = 0.4
        assert np.array_equal(
            nls.rom_rhs(a, basis), nls.rom_rhs(a, basis, quantities=(zero_q,))
        )

    def test_constrained_tangency(self, rng):
        snaps = 0.1 * (rng.standard_normal((30, N_GRID)) + 1j * rng.standard_normal((30, N_GRID)))
        basis = nls.compute_pod(snaps, 4, LENGTH)
        quantities = nls.rom_quantities(basis)
        for _ in range(5):
            a = 0.5 * rng.standard_normal(8)
            a_dot = nls.rom_rhs(a, basis, quantities=quantities)
            for q in quantities:
                g = q.gradient(a)
                bound = 1e-10 * np.linalg.norm(g) * max(np.linalg.norm(a_dot), 1.0)
                assert abs(g @ a_dot) <= bound

    def test_full_fourier_rank_reproduces_dns(self):
        # plain projection on the complete Fourier basis is the
        # pseudo-spectral method itself; short trajectories must agree
        basis = fourier_basis(N_GRID)
        ic = nls.nls_random_ic(6, LENGTH, N_GRID)
        a0 = nls.project_ic(ic, basis)
        dt = nls.stable_dt(N_GRID, LENGTH)
        rom_series, _ = nls.rom_run(a0, basis, 2.0, 0.5, dt)
        dns_series, _ = nls.dns_run(ic, 2.0, 0.5, dt=dt)
        scale = np.max(np.abs(dns_series.snapshots))
        diff = np.max(np.abs(rom_series.snapshots - dns_series.snapshots))
        assert diff <= 1e-8 * scale


class TestBatchedEngines:
    def test_dns_batch_matches_serial(self):
        ics = [nls.nls_random_ic(s, LENGTH, N_GRID) for s in range(3)]
        batch, _ = nls.dns_run_batch(ics, 2.0, 0.5)
        for ic, series in zip(ics, batch):
            solo, _ = nls.dns_run(ic, 2.0, 0.5)
            assert np.max(np.abs(solo.snapshots - series.snapshots)) < 1e-13

    def test_rom_batch_matches_serial(self, rng):
        snaps = 0.1 * (rng.standard_normal((30, N_GRID)) + 1j * rng.standard_normal((30, N_GRID)))
        basis = nls.compute_pod(snaps, 4, LENGTH)
        quantities = nls.rom_quantities(basis)
        a0s = 0.4 * rng.standard_normal((3, 8))
        for enforce in (False, True):
            batch, _ = nls.rom_run_batch(a0s, basis, 1.0, 0.5, 1 / 32, enforce=enforce)
            for i in range(3):
                solo, _ = nls.rom_run(
                    a0s[i], basis, 1.0, 0.5, 1 / 32,
                    quantities=quantities if enforce else (),
                )
                assert np.max(np.abs(solo.snapshots - batch[i].snapshots)) < 1e-12


class TestErrorMetrics:
    def _series(self, values):
        times = np.arange(values.shape[0], dtype=float)
        return nls.SnapshotSeries(times, values, LENGTH)

    def test_identical_series_zero_error(self, rng):
        u = rng.standard_normal((5, N_GRID)) + 1j * rng.standard_normal((5, N_GRID))
        inst, total = nls.relative_errors(self._series(u), self._series(u.copy()), 0, 4)
        assert not inst.any()
        assert total == 0.0

    def test_zero_model_gives_unit_error(self, rng):
        u = rng.standard_normal((5, N_GRID)) + 1j * rng.standard_normal((5, N_GRID))
        inst, total = nls.relative_errors(
            self._series(u), self._series(np.zeros_like(u)), 0, 4
        )
        assert np.allclose(inst, 1.0)
        assert total == pytest.approx(1.0)

    def test_small_multiplicative_perturbation(self, rng):
        # oracle: u_hat = (1 + d) u gives eps_I = d^2 exactly
        u = rng.standard_normal((5, N_GRID)) + 1j * rng.standard_normal((5, N_GRID))
        inst, total = nls.relative_errors(
            self._series(u), self._series(u * (1 + 1e-3)), 0, 4
        )
        assert np.allclose(inst, 1e-6, rtol=1e-9)
        assert total == pytest.approx(1e-6, rel=1e-9)

    def test_misaligned_times_rejected(self, rng):
        u = rng.standard_normal((5, N_GRID)) + 1j * rng.standard_normal((5, N_GRID))
        shifted = nls.SnapshotSeries(np.arange(5) + 0.25, u, LENGTH)
        with pytest.raises(AlignmentError):
            nls.relative_errors(self._series(u), shifted, 0, 4)


class TestMaxEnvelopePdf:
    def test_constant_field_point_mass(self):
        samples = np.full(50, 2.0)
        edges, density = nls.max_envelope_pdf(samples, 5)
        widths = np.diff(edges)
        assert np.sum(density * widths) == pytest.approx(1.0, abs=1e-12)

    def test_two_values_equal_masses(self):
        edges, density = nls.max_envelope_pdf(np.array([1.0, 3.0]), np.array([0.0, 2.0, 4.0]))
        assert density[0] == density[1]

    def test_normalization(self, rng):
        samples = rng.standard_normal(500) ** 2
        edges, density = nls.max_envelope_pdf(samples, 20)
        assert np.sum(density * np.diff(edges)) == pytest.approx(1.0, abs=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(ValidationError):
            nls.max_envelope_pdf(np.array([]), 4)
