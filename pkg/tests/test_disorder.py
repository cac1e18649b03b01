"""Atomistic alloy sampling and the smoothed profile a dot feels."""

import math
from dataclasses import replace

import numpy as np
import pytest

from conftest import (
    SMALL_EXTENT,
    constant_probability_profile,
    effective_variance_zscores,
    small_disorder_spec,
    small_dot,
)
from wigglewell import (
    DisorderEnsemble,
    DotGeometry,
    build_profile,
    case1_sweep,
    case2_sweep,
    dot_sweep_study,
    effective_profile,
    ensemble,
    sample_alloy_field,
)
from wigglewell.constants import SILICON
from wigglewell.errors import ConfigError, ExtentTooSmall


class TestDotGeometry:
    def test_orbital_radii(self):
        """r = sqrt(2 hbar^2 / 2m_t E): 20.0 nm at 1 meV, 4.48 nm at 20 meV."""
        dot = DotGeometry(energy_x_mev=1.0, energy_y_mev=2.0)
        assert dot.radius_x() == pytest.approx(20.026, rel=1e-3)
        assert dot.radius_y() == pytest.approx(14.161, rel=1e-3)
        assert DotGeometry(20.0, 20.0).radius_x() == pytest.approx(4.478, rel=1e-3)

    def test_orbital_energy_alias(self):
        dot = DotGeometry(energy_x_mev=1.5, energy_y_mev=2.0)
        assert dot.orbital_energy_mev == 1.5

    def test_energies_must_be_positive(self):
        with pytest.raises(ConfigError):
            DotGeometry(energy_x_mev=0.0, energy_y_mev=2.0)
        with pytest.raises(ConfigError):
            DotGeometry(energy_x_mev=1.0, energy_y_mev=-2.0)


class TestSampling:
    def test_monolayer_grid_is_required(self):
        profile = build_profile(small_disorder_spec())
        fine = build_profile(replace(small_disorder_spec(), points_per_monolayer=12))
        sample_alloy_field(profile, 1, extent=(10.0, 10.0))
        with pytest.raises(ConfigError, match="points_per_monolayer=1"):
            sample_alloy_field(fine, 1, extent=(10.0, 10.0))

    def test_same_seed_is_bit_identical(self):
        profile = build_profile(small_disorder_spec())
        a = sample_alloy_field(profile, 42, extent=(15.0, 15.0))
        b = sample_alloy_field(profile, 42, extent=(15.0, 15.0))
        c = sample_alloy_field(profile, 43, extent=(15.0, 15.0))
        assert np.array_equal(a.occupancy, b.occupancy)
        assert not np.array_equal(a.occupancy, c.occupancy)

    def test_deterministic_layers_sample_deterministically(self):
        empty = constant_probability_profile(0.0)
        full = constant_probability_profile(1.0)
        assert not sample_alloy_field(empty, 3, extent=(10.0, 10.0)).occupancy.any()
        assert sample_alloy_field(full, 3, extent=(10.0, 10.0)).occupancy.all()

    def test_occupation_counts_are_binomial(self):
        """Mean site count over 100 seeds sits within 5 standard errors."""
        profile = constant_probability_profile(0.5)
        n_layers = profile.z.size
        counts = []
        for seed in range(100):
            field = sample_alloy_field(profile, seed, extent=(20.0, 20.0))
            counts.append(field.occupancy.sum(axis=(1, 2)))
        counts = np.array(counts, dtype=float)
        n_sites = field.occupancy.shape[1] * field.occupancy.shape[2]
        sigma = math.sqrt(n_sites * 0.25)
        sem = sigma / math.sqrt(100 * n_layers)
        assert abs(counts.mean() - 0.5 * n_sites) < 5.0 * sem

    def test_layer_fractions_track_the_profile(self):
        profile = build_profile(small_disorder_spec())
        field = sample_alloy_field(profile, 11, extent=(40.0, 40.0))
        n_sites = field.occupancy.shape[1] * field.occupancy.shape[2]
        p = profile.total
        sigma = np.sqrt(np.maximum(p * (1.0 - p), 1e-30) / n_sites)
        deviation = np.abs(field.layer_fractions() - p)
        assert np.all(deviation <= 5.0 * sigma + 1e-12)


class TestEffectiveProfile:
    def test_weighted_average_obeys_the_law_of_large_numbers(self):
        """Each layer's felt concentration lands within 5 weighted sigmas."""
        profile = build_profile(small_disorder_spec())
        dot = small_dot()
        field = sample_alloy_field(profile, 7, extent=SMALL_EXTENT)
        felt = effective_profile(field, dot)
        wx = np.exp(-(field.x**2) / dot.radius_x() ** 2)
        wy = np.exp(-(field.y**2) / dot.radius_y() ** 2)
        w = np.outer(wx, wy)
        w /= w.sum()
        sum_w2 = float((w**2).sum())
        p = profile.total
        sigma = np.sqrt(np.maximum(p * (1.0 - p) * sum_w2, 1e-30))
        assert np.all(np.abs(felt.total - p) <= 5.0 * sigma + 1e-12)
        assert np.all((felt.total >= 0.0) & (felt.total <= 1.0))
        assert felt.sampled

    def test_variance_matches_the_weighted_binomial_formula(self):
        """Sample variance over seeds against p(1-p) sum(w^2), as z-scores."""
        zscores = effective_variance_zscores()
        assert np.max(np.abs(zscores)) <= 3.0

    def test_deterministic_layers_pass_through(self):
        """p in {0, 1} has no sampling noise, so the average is exact."""
        for p in (0.0, 1.0):
            profile = constant_probability_profile(p)
            field = sample_alloy_field(profile, 21, extent=SMALL_EXTENT)
            felt = effective_profile(field, small_dot())
            assert np.allclose(felt.total, p, atol=1e-13)

    def test_small_extent_is_refused(self):
        profile = build_profile(small_disorder_spec())
        field = sample_alloy_field(profile, 5, extent=(30.0, 30.0))
        with pytest.raises(ExtentTooSmall, match="truncates"):
            effective_profile(field, DotGeometry(1.0, 1.0))


@pytest.fixture(scope="module")
def small_ensemble(perturbative_model):
    return ensemble(
        small_disorder_spec(),
        perturbative_model,
        small_dot(),
        6,
        900,
        extent=SMALL_EXTENT,
    )


@pytest.fixture(scope="module")
def frozen_field():
    profile = build_profile(small_disorder_spec())
    return sample_alloy_field(profile, 77, extent=(52.0, 60.0))


class TestEnsemble:
    def test_seed_layout(self, small_ensemble):
        assert [s.seed for s in small_ensemble.samples] == [900 + k for k in range(6)]
        assert [s.index for s in small_ensemble.samples] == list(range(6))

    def test_worker_count_cannot_change_values(self, perturbative_model, small_ensemble):
        parallel = ensemble(
            small_disorder_spec(),
            perturbative_model,
            small_dot(),
            6,
            900,
            extent=SMALL_EXTENT,
            workers=3,
        )
        assert np.array_equal(parallel.splittings(), small_ensemble.splittings())

    def test_sample_recomputes_from_its_seed(self, perturbative_model, small_ensemble):
        """A recorded seed reproduces its sample exactly from scratch."""
        target = small_ensemble.samples[3]
        spec = replace(small_disorder_spec(), points_per_monolayer=1)
        profile = build_profile(spec)
        field = sample_alloy_field(profile, target.seed, extent=SMALL_EXTENT)
        felt = effective_profile(field, small_dot())
        res = perturbative_model.splitting_for_profile(felt)
        assert res.splitting_ev == target.splitting_ev

    def test_summary_is_permutation_invariant(self, small_ensemble):
        shuffled = list(small_ensemble.samples)
        rng = np.random.default_rng(0)
        rng.shuffle(shuffled)
        twin = DisorderEnsemble(
            samples=shuffled,
            base_seed=small_ensemble.base_seed,
            extent=small_ensemble.extent,
        )
        assert twin.summary() == small_ensemble.summary()

    def test_summary_keys_and_order(self, small_ensemble):
        stats = small_ensemble.summary()
        assert stats["n"] == 6
        assert stats["p5_ev"] <= stats["p25_ev"] <= stats["p75_ev"] <= stats["p95_ev"]
        assert stats["std_ev"] > 0.0

    def test_single_sample_statistics_degenerate(self, perturbative_model):
        single = ensemble(
            small_disorder_spec(),
            perturbative_model,
            small_dot(),
            1,
            900,
            extent=SMALL_EXTENT,
        )
        stats = single.summary()
        value = single.samples[0].splitting_ev
        assert stats["std_ev"] == 0.0
        assert stats["p5_ev"] == stats["p95_ev"] == stats["mean_ev"] == value

    def test_rejects_empty_request(self, perturbative_model):
        with pytest.raises(ConfigError):
            ensemble(
                small_disorder_spec(), perturbative_model, small_dot(), 0, 1
            )

    def test_csv_schema(self, small_ensemble, tmp_path):
        path = tmp_path / "ensemble.csv"
        small_ensemble.to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[1] == "sample_index,seed,E_orb_meV,E_v_eV,E_v_ueV"
        assert len(lines) == 2 + 6
        first = lines[2].split(",")
        assert first[0] == "0" and first[1] == "900"
        assert float(first[4]) == float(first[3]) * 1e6


class TestDotSweeps:
    def test_case2_is_the_zero_drift_limit_of_case1(
        self, frozen_field, perturbative_model
    ):
        dot = small_dot()
        span = (10.0, 20.0)
        still = case1_sweep(
            frozen_field, perturbative_model, dot, y0_range_nm=0.0,
            energy_span_mev=span, n_points=3,
        )
        squeezed = case2_sweep(
            frozen_field, perturbative_model, dot, energy_span_mev=span, n_points=3
        )
        assert [p.splitting_ev for p in still] == [p.splitting_ev for p in squeezed]
        assert {p.case for p in still} == {"case1"}
        assert {p.case for p in squeezed} == {"case2"}

    def test_sweep_schedule(self, frozen_field, perturbative_model):
        """The sweep parameter drives position and confinement together."""
        points = case1_sweep(
            frozen_field, perturbative_model, small_dot(), y0_range_nm=6.0,
            energy_span_mev=(10.0, 20.0), n_points=3,
        )
        assert [p.sweep_param for p in points] == [0.0, 0.5, 1.0]
        assert [p.y_nm for p in points] == [0.0, 3.0, 6.0]
        assert [p.orbital_energy_mev for p in points] == [10.0, 15.0, 20.0]

    def test_fixed_span_pins_every_point(self, frozen_field, perturbative_model):
        points = case2_sweep(
            frozen_field, perturbative_model, small_dot(),
            energy_span_mev=(15.0, 15.0), n_points=3,
        )
        values = [p.splitting_ev for p in points]
        assert values[0] == values[1] == values[2]

    def test_study_runs_both_protocols_on_shared_seeds(self, perturbative_model):
        study = dot_sweep_study(
            small_disorder_spec(),
            perturbative_model,
            small_dot(),
            3,
            4100,
            y0_range_nm=6.0,
            energy_span_mev=(10.0, 20.0),
            workers=2,
        )
        stats = study.summary()
        assert stats["case1"]["n_seeds"] == stats["case2"]["n_seeds"] == 3
        assert {p.seed for p in study.points} == {4100, 4101, 4102}
        changes = study.aligned_changes("case1")
        assert changes.size == 3 and np.all(np.diff(changes) >= 0.0)
        assert stats["case1"]["change_span_ev"] == changes[-1] - changes[0]

    def test_study_csv_schema(self, perturbative_model, tmp_path):
        study = dot_sweep_study(
            small_disorder_spec(),
            perturbative_model,
            small_dot(),
            2,
            4200,
            y0_range_nm=6.0,
            energy_span_mev=(10.0, 20.0),
        )
        path = tmp_path / "study.csv"
        study.to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[1] == "case,seed,sweep_param,y0_nm,E_orb_meV,E_v_eV,E_v_ueV"
        assert len(lines) == 2 + 2 * 2 * 2
