"""Intervalley coupling against analytic and structural oracles."""

import numpy as np
import pytest

from conftest import gaussian_envelope
from wigglewell import (
    BlochCoefficientTable,
    ProfileSpec,
    ValleyModel,
    ValleySplittingCurve,
    build_profile,
    coupling_channels,
    coupling_from_potential,
    intervalley_coupling,
    intervalley_element,
    potential_from_profile,
    scan_q,
    solve_envelope,
    two_component_spectrum,
)
from wigglewell.constants import SILICON
from wigglewell.errors import ConfigError, GridTooCoarse

TWO_K0 = 2.0 * SILICON.valley_wavevector
# the short-period resonance: one reciprocal lattice unit minus 2 k0
Q_RES = 4.0 * np.pi / SILICON.lattice_constant - TWO_K0


def density_moment(sigma: float, k: float) -> float:
    """Fourier moment of the normalized density exp(-z^2/sigma^2)."""
    return np.exp(-((k * sigma) ** 2) / 4.0)


class TestAnalyticOracle:
    def test_gaussian_envelope_matches_closed_form(self):
        """Single-coefficient coupling of a Gaussian density, closed form.

        For |psi|^2 = exp(-z^2/sigma^2) the plane-wave moments are
        Gaussians too, so the coupling reduces to three exponentials.
        """
        single = BlochCoefficientTable.single_coefficient()
        sigma = 0.4
        env = gaussian_envelope(sigma)
        amplitude = 0.10
        v0 = abs(SILICON.alloy_shift)
        for q in (1.0, 3.0):
            res = intervalley_element(
                env, single, amplitude, q, well_offset=0.0, phase_origin=0.0
            )
            closed_form = (amplitude * v0 / 4.0) * abs(
                density_moment(sigma, TWO_K0 - q)
                + density_moment(sigma, TWO_K0 + q)
                - 2.0 * density_moment(sigma, TWO_K0)
            )
            assert abs(res.coupling_ev) == pytest.approx(closed_form, rel=1e-6)
            assert res.splitting_ev == pytest.approx(2.0 * closed_form, rel=1e-6)

    def test_coupling_is_linear_in_amplitude(self):
        single = BlochCoefficientTable.single_coefficient()
        env = gaussian_envelope(0.4)
        small = intervalley_element(env, single, 0.05, 3.0)
        large = intervalley_element(env, single, 0.10, 3.0)
        assert abs(large.coupling_ev) == pytest.approx(
            2.0 * abs(small.coupling_ev), rel=1e-12
        )

    def test_zero_amplitude_gives_zero_coupling(self):
        single = BlochCoefficientTable.single_coefficient()
        env = gaussian_envelope(0.4)
        res = intervalley_element(env, single, 0.0, 3.0)
        assert res.coupling_ev == 0.0
        assert res.splitting_ev == 0.0

    def test_joint_translation_leaves_magnitude_alone(self):
        """Moving envelope and oscillation together only rotates the phase."""
        from wigglewell import EnvelopeSolution

        single = BlochCoefficientTable.single_coefficient()
        env = gaussian_envelope(0.4)
        shift = 0.731
        moved = EnvelopeSolution(
            z=env.z + shift, energies=env.energies, states=env.states, mass=env.mass
        )
        a = intervalley_element(env, single, 0.10, 3.0, phase_origin=0.0)
        b = intervalley_element(moved, single, 0.10, 3.0, phase_origin=shift)
        assert abs(b.coupling_ev) == pytest.approx(abs(a.coupling_ev), rel=1e-9)
        assert abs(b.coupling_ev - a.coupling_ev) > 0.0

    def test_hand_grid_identity(self):
        """The channel sum is literally a trapezoid moment per channel."""
        single = BlochCoefficientTable.single_coefficient()
        z = np.linspace(-3.0, 3.0, 1201)
        density = np.exp(-(z**2))
        density /= np.trapezoid(density, z)
        vosc = -0.04 * (1.0 - np.cos(3.5 * z))
        got = intervalley_coupling(
            z, density, vosc, single, oscillation_wavevector=3.5
        )
        hand = np.trapezoid(density * np.exp(-1j * TWO_K0 * z) * vosc, z)
        assert got == pytest.approx(hand, rel=1e-14)


class TestPerturbativeModel:
    def test_splitting_is_twice_the_coupling(self, perturbative_model):
        spec = ProfileSpec(amplitude=0.05, wavelength=1.8)
        res = perturbative_model.splitting_for_spec(spec)
        assert res.splitting_ev == 2.0 * abs(res.coupling_ev)
        assert res.splitting_uev == res.splitting_ev * 1e6
        assert res.mode == "perturbative"

    def test_symmetric_table_extinguishes_the_resonance(
        self, broken_table, symmetric_table
    ):
        """Phase structure decides whether the short-period peak survives.

        With coefficients of equal magnitude and opposite-parity phases
        the resonant channel pair cancels; breaking either the phases or
        the magnitudes revives it by more than an order of magnitude.
        """
        spec = ProfileSpec(amplitude=0.05, wavelength=2.0 * np.pi / Q_RES)
        e_broken = ValleyModel(broken_table).splitting_for_spec(spec).splitting_ev
        e_sym = ValleyModel(symmetric_table).splitting_for_spec(spec).splitting_ev
        e_rand = (
            ValleyModel(broken_table.with_random_phases(99))
            .splitting_for_spec(spec)
            .splitting_ev
        )
        assert e_sym < 0.1 * e_broken
        assert e_sym < 0.1 * e_rand
        assert e_broken == pytest.approx(198.304e-6, rel=1e-3)

    def test_swapped_table_gives_identical_splitting(self, broken_table):
        spec = ProfileSpec(amplitude=0.05, wavelength=2.0 * np.pi / Q_RES)
        a = ValleyModel(broken_table).splitting_for_spec(spec).splitting_ev
        b = ValleyModel(broken_table.swapped()).splitting_for_spec(spec).splitting_ev
        assert b == pytest.approx(a, rel=1e-12)

    def test_large_q_rolls_off(self, perturbative_model):
        main = perturbative_model.splitting_for_spec(
            ProfileSpec(amplitude=0.05, wavelength=2.0 * np.pi / TWO_K0)
        )
        far = perturbative_model.splitting_for_spec(
            ProfileSpec(amplitude=0.05, wavelength=2.0 * np.pi / 25.0)
        )
        assert far.splitting_ev < 0.05 * main.splitting_ev

    def test_resolution_guard(self, broken_table):
        spec = ProfileSpec(amplitude=0.05, wavelength=1.8, points_per_monolayer=2)
        with pytest.raises(GridTooCoarse):
            ValleyModel(broken_table).splitting_for_spec(spec)
        # monolayer-sampled profiles live on the lattice and are exempt
        lattice = ProfileSpec(amplitude=0.05, wavelength=1.8, points_per_monolayer=1)
        ValleyModel(broken_table).splitting_for_spec(lattice)

    def test_coarse_hand_grid_raises(self, broken_table):
        z = np.linspace(-3.0, 3.0, 31)
        rho = np.full_like(z, 1.0 / 6.0)
        with pytest.raises(GridTooCoarse):
            intervalley_coupling(z, rho, np.zeros_like(z), broken_table)


class TestTwoComponentModel:
    def test_gap_vanishes_without_oscillation(self, broken_table):
        pot = potential_from_profile(build_profile(ProfileSpec(amplitude=0.0)))
        res = two_component_spectrum(pot, broken_table)
        assert res.splitting_ev < 1e-12
        assert res.mode == "two_component"

    def test_weak_coupling_agrees_with_perturbation_theory(self, broken_table):
        spec = ProfileSpec(amplitude=0.01, wavelength=2.0 * np.pi / Q_RES)
        pot = potential_from_profile(build_profile(spec))
        pert = coupling_from_potential(solve_envelope(pot), pot, broken_table)
        two = two_component_spectrum(pot, broken_table)
        assert two.splitting_ev == pytest.approx(pert.splitting_ev, rel=0.01)

    def test_second_harmonic_grows_quadratically(self, broken_table):
        """Near q = k0 the splitting is a second-order effect."""
        heights = []
        for amplitude in (0.05, 0.10):
            spec = ProfileSpec(amplitude=amplitude, wavelength=2.0 * np.pi / 9.72)
            pot = potential_from_profile(build_profile(spec))
            heights.append(two_component_spectrum(pot, broken_table).splitting_ev)
        assert 3.0 < heights[1] / heights[0] < 5.0


class TestCouplingChannels:
    def test_bundled_table_channel_offsets(self, broken_table):
        unit = SILICON.umklapp_unit
        offsets = sorted(coupling_channels(broken_table).keys())
        assert np.allclose(offsets, [-2.0 * unit, -unit, 0.0, unit, 2.0 * unit])

    def test_umklapp_cutoff(self, broken_table):
        assert list(coupling_channels(broken_table, max_umklapp=0)) == [0.0]

    def test_single_coefficient_table_has_one_unit_channel(self):
        single = BlochCoefficientTable.single_coefficient()
        channels = coupling_channels(single)
        assert list(channels) == [0.0]
        assert channels[0.0] == pytest.approx(1.0)


class TestTableIO:
    def test_roundtrip_is_bitwise(self, tmp_path, broken_table):
        path = tmp_path / "table.csv"
        broken_table.to_csv(path)
        back = BlochCoefficientTable.from_csv(path)
        assert np.array_equal(back.k_vectors, broken_table.k_vectors)
        assert np.array_equal(back.c_plus, broken_table.c_plus)
        assert np.array_equal(back.c_minus, broken_table.c_minus)
        assert back.source_label == broken_table.source_label

    def test_unknown_bundled_name_is_listed(self):
        with pytest.raises(ConfigError, match="si_broken"):
            BlochCoefficientTable.bundled("si_missing")

    def test_norm_window_is_enforced(self):
        k = np.array([[0.0, 0.0, 0.0]])
        half = np.array([0.5 + 0.0j])
        with pytest.raises(ConfigError, match="outside"):
            BlochCoefficientTable(k, half, half, "halved")

    def test_duplicate_wavevectors_are_rejected(self):
        k = np.zeros((2, 3))
        c = np.array([0.8 + 0.0j, 0.8j])
        with pytest.raises(ConfigError, match="duplicate"):
            BlochCoefficientTable(k, c, c, "dup")

    def test_from_csv_needs_all_columns(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("kx,ky,kz\n0.0,0.0,0.0\n")
        with pytest.raises(ConfigError):
            BlochCoefficientTable.from_csv(path)

    def test_random_phases_are_deterministic(self, broken_table):
        a = broken_table.with_random_phases(5)
        b = broken_table.with_random_phases(5)
        c = broken_table.with_random_phases(6)
        assert np.array_equal(a.c_plus, b.c_plus)
        assert not np.array_equal(a.c_plus, c.c_plus)
        assert np.allclose(np.abs(a.c_plus), np.abs(broken_table.c_plus))


class TestCurveAndScan:
    def test_curve_validation(self):
        with pytest.raises(ConfigError, match="strictly increasing"):
            ValleySplittingCurve(
                np.array([2.0, 1.0]), np.array([1e-6, 2e-6]), "perturbative", {}
            )
        with pytest.raises(ConfigError, match="matching"):
            ValleySplittingCurve(
                np.array([1.0, 2.0]), np.array([1e-6]), "perturbative", {}
            )

    def test_curve_aliases_and_csv(self, tmp_path):
        q = np.array([1.0, 2.0, 3.0])
        e = np.array([1e-6, 5e-6, 2e-6])
        curve = ValleySplittingCurve(q, e, "perturbative", {})
        assert np.array_equal(curve.q_values, q)
        assert np.array_equal(curve.E_v_values, e)
        assert curve.global_max() == (2.0, 5e-6)
        assert curve.peaks()[0] == (2.0, 5e-6)
        path = tmp_path / "curve.csv"
        curve.to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[1] == "q_inv_nm,E_v_eV,E_v_ueV"
        data = np.loadtxt(path, delimiter=",", skiprows=2)
        assert np.array_equal(data[:, 2], e * 1e6)

    def test_scan_is_independent_of_worker_count(self, perturbative_model):
        template = ProfileSpec(amplitude=0.05, wavelength=1.8)
        q_values = np.linspace(3.0, 5.0, 6)
        serial = scan_q(template, q_values, perturbative_model, workers=1)
        parallel = scan_q(template, q_values, perturbative_model, workers=2)
        assert np.array_equal(serial.splitting_ev, parallel.splitting_ev)
        assert serial.metadata["mode"] == "perturbative"
        assert serial.metadata["global_max"]["q_inv_nm"] in q_values

    def test_scan_input_validation(self, perturbative_model):
        template = ProfileSpec(amplitude=0.05, wavelength=1.8)
        with pytest.raises(ConfigError):
            scan_q(template, [], perturbative_model)
        with pytest.raises(ConfigError):
            scan_q(template, [-1.0, 2.0], perturbative_model)
        with pytest.raises(ConfigError):
            scan_q(template, [2.0, 1.0], perturbative_model)


class TestModelConfig:
    def test_mode_alias_and_validation(self, broken_table):
        assert ValleyModel(broken_table, mode="two-component").mode == "two_component"
        with pytest.raises(ConfigError, match="mode"):
            ValleyModel(broken_table, mode="magic")
