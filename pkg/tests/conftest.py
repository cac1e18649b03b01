"""Shared fixtures plus the acceptance criteria report.

Acceptance tests register one verdict each through record_criterion. The
terminal summary hook prints them after the run, so every criterion gets
its own visible pass or fail line no matter how the assertions interleave
with the rest of the suite.
"""

from __future__ import annotations

import numpy as np
import pytest

from wigglewell import BlochCoefficientTable, DotGeometry, ProfileSpec, ValleyModel

_CRITERIA: dict[int, tuple[bool, str]] = {}


def record_criterion(number: int, passed: bool, detail: str) -> None:
    _CRITERIA[number] = (bool(passed), detail)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        passed, detail = _CRITERIA[number]
        verdict = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {number}: {verdict}  {detail}")


@pytest.fixture(scope="session")
def broken_table() -> BlochCoefficientTable:
    return BlochCoefficientTable.bundled("si_broken")


@pytest.fixture(scope="session")
def symmetric_table() -> BlochCoefficientTable:
    return BlochCoefficientTable.bundled("si_symmetric")


@pytest.fixture(scope="session")
def perturbative_model(broken_table) -> ValleyModel:
    return ValleyModel(table=broken_table, mode="perturbative")


@pytest.fixture(scope="session")
def doublet_model(broken_table) -> ValleyModel:
    return ValleyModel(table=broken_table, mode="two_component")


def small_disorder_spec(amplitude: float = 0.10) -> ProfileSpec:
    """A short monolayer-grid structure that keeps alloy fields cheap."""
    return ProfileSpec(
        amplitude=amplitude,
        wavelength=1.8,
        well_width=6.0,
        extent_below=6.0,
        extent_above=4.0,
        points_per_monolayer=1,
    )


def small_dot() -> DotGeometry:
    # 20 meV confinement keeps the weight radius near 4.5 nm, so a 40 nm
    # box holds the full dot mass within the truncation budget
    return DotGeometry(energy_x_mev=20.0, energy_y_mev=20.0)


SMALL_EXTENT = (40.0, 40.0)


def gaussian_envelope(sigma_nm: float, dz: float = 0.005, n_sigma: float = 8.0):
    """Synthetic normalized envelope with |psi|^2 of the form exp(-z^2/s^2)."""
    from wigglewell import EnvelopeSolution

    half = n_sigma * sigma_nm
    n = int(round(2.0 * half / dz))
    z = (np.arange(n + 1) - n / 2) * dz
    psi = np.exp(-(z**2) / (2.0 * sigma_nm**2)) / (np.pi * sigma_nm**2) ** 0.25
    psi = psi / np.sqrt(np.sum(psi**2) * dz)
    return EnvelopeSolution(
        z=z, energies=np.array([0.0]), states=psi[None, :], mass=0.92
    )


def constant_probability_profile(p: float, n_layers: int = 8):
    """Flat occupation probability on a bare monolayer grid."""
    from wigglewell import ConcentrationProfile
    from wigglewell.constants import SILICON

    z = np.arange(n_layers) * SILICON.monolayer
    return ConcentrationProfile(
        z=z,
        total=np.full(n_layers, float(p)),
        background=np.zeros(n_layers),
        interface_z=0.0,
    )


_ZSCORE_CACHE: dict = {}


def effective_variance_zscores(n_seeds: int = 1000, base_seed: int = 515000):
    """Compare per-layer variance of the felt concentration with its oracle.

    For independent site draws at probability p averaged with normalized
    weights w, the variance of the average is p (1 - p) sum(w^2). Returns
    the z score of the sample variance per mid-range layer, using the
    normal-theory spread sigma^2 sqrt(2 / (n - 1)). The seed count keeps
    the skew of the variance estimator small enough that a 3 sigma band
    holds across every layer at once.
    """
    key = (n_seeds, base_seed)
    if key in _ZSCORE_CACHE:
        return _ZSCORE_CACHE[key]
    from wigglewell import build_profile, effective_profile, sample_alloy_field

    profile = build_profile(small_disorder_spec())
    dot = small_dot()
    felt = np.empty((n_seeds, profile.z.size))
    for k in range(n_seeds):
        field = sample_alloy_field(profile, base_seed + k, extent=SMALL_EXTENT)
        felt[k] = effective_profile(field, dot).total

    field = sample_alloy_field(profile, base_seed, extent=SMALL_EXTENT)
    wx = np.exp(-((field.x - 0.0) ** 2) / dot.radius_x() ** 2)
    wy = np.exp(-((field.y - 0.0) ** 2) / dot.radius_y() ** 2)
    w = np.outer(wx, wy).ravel()
    w = w / w.sum()
    sum_w2 = float(np.sum(w**2))

    p = profile.total
    keep = (p > 0.05) & (p < 0.95)
    oracle = p[keep] * (1.0 - p[keep]) * sum_w2
    sample = np.var(felt[:, keep], axis=0, ddof=1)
    spread = oracle * np.sqrt(2.0 / (n_seeds - 1))
    _ZSCORE_CACHE[key] = (sample - oracle) / spread
    return _ZSCORE_CACHE[key]
