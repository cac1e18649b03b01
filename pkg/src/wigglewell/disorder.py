"""Atomistic alloy disorder seen by a laterally confined dot.

A concentration profile on the monolayer grid defines per-layer occupation
probabilities. Sites live on a square in-plane grid with one atom per cell
chosen so each monolayer carries the diamond areal density. A harmonic dot
weights every site by its in-plane ground state density; the weighted
occupation average per layer is the concentration that dot actually feels.
Feeding that effective profile back through a splitting model gives one
disorder realization of the valley splitting.

All randomness flows through counter-based bit generators keyed by an
explicit per-sample seed, so results are reproducible bit for bit for any
worker count or evaluation order.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import erf

from .constants import SILICON, MaterialConstants
from .errors import ConfigError, ExtentTooSmall
from .heterostructure import ConcentrationProfile, ProfileSpec, build_profile
from .valley import ValleyModel

__all__ = [
    "DotGeometry",
    "AlloyField",
    "EnsembleSample",
    "DisorderEnsemble",
    "SweepPoint",
    "DotSweepStudy",
    "sample_alloy_field",
    "effective_profile",
    "ensemble",
    "case1_sweep",
    "case2_sweep",
    "dot_sweep_study",
]

# truncating the lateral grid this many dot radii from the center keeps the
# lost weight fraction per axis below 1e-8
_SAFE_RADII = 4.3


@dataclass(frozen=True)
class DotGeometry:
    """Harmonic in-plane confinement of a gate-defined dot."""

    energy_x_mev: float = 2.0
    energy_y_mev: float = 2.0
    center_x_nm: float = 0.0
    center_y_nm: float = 0.0

    def __post_init__(self) -> None:
        if self.energy_x_mev <= 0.0 or self.energy_y_mev <= 0.0:
            raise ConfigError("orbital energies must be positive")

    def radius_x(self, constants: MaterialConstants = SILICON) -> float:
        """Density decay length along x: weight falls as exp(-dx^2/r^2)."""
        return _orbital_radius(self.energy_x_mev, constants)

    def radius_y(self, constants: MaterialConstants = SILICON) -> float:
        return _orbital_radius(self.energy_y_mev, constants)

    @property
    def orbital_energy_mev(self) -> float:
        return self.energy_x_mev


def _orbital_radius(energy_mev: float, constants: MaterialConstants) -> float:
    # ground state density of a harmonic oscillator with the transverse
    # mass: |chi|^2 ~ exp(-x^2/r^2), r = sqrt(2 (hbar^2/2m) / (m_t E))
    return math.sqrt(
        2.0 * constants.hbar2_over_2m0 / (constants.mass_transverse * energy_mev * 1e-3)
    )


@dataclass(eq=False)
class AlloyField:
    """One atomistic realization of the alloy on the site grid."""

    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    occupancy: np.ndarray
    profile: ConcentrationProfile
    seed: int

    @property
    def n_sites_per_layer(self) -> int:
        return self.x.size * self.y.size

    def layer_fractions(self) -> np.ndarray:
        """Unweighted Ge fraction per layer."""
        return self.occupancy.mean(axis=(1, 2))


def sample_alloy_field(
    profile: ConcentrationProfile,
    seed: int,
    *,
    extent: tuple[float, float] = (120.0, 120.0),
    center: tuple[float, float] = (0.0, 0.0),
    constants: MaterialConstants = SILICON,
) -> AlloyField:
    """Draw site occupations for every monolayer of a profile.

    The profile must live on the monolayer grid: each grid point is one
    atomic layer whose total concentration is the occupation probability.
    Draws are made layer by layer from a counter-based generator keyed by
    ``seed`` alone, so the realization is a pure function of the seed.
    """
    if abs(profile.dz - constants.monolayer) > 1e-9:
        raise ConfigError(
            "atomistic sampling needs a monolayer grid "
            f"(step {constants.monolayer:.5f} nm), got {profile.dz:.5f} nm; "
            "build the profile with points_per_monolayer=1"
        )
    lx, ly = extent
    if lx <= 0.0 or ly <= 0.0:
        raise ConfigError("extent must be positive in both directions")
    pitch = constants.site_spacing
    nx = max(int(round(lx / pitch)), 1)
    ny = max(int(round(ly / pitch)), 1)
    x = (np.arange(nx) - 0.5 * (nx - 1)) * pitch + center[0]
    y = (np.arange(ny) - 0.5 * (ny - 1)) * pitch + center[1]

    p = np.clip(profile.total, 0.0, 1.0)
    rng = np.random.Generator(np.random.Philox(key=seed))
    occupancy = np.empty((p.size, nx, ny), dtype=np.uint8)
    for layer, prob in enumerate(p):
        occupancy[layer] = rng.random((nx, ny)) < prob
    return AlloyField(
        x=x, y=y, z=profile.z.copy(), occupancy=occupancy, profile=profile, seed=seed
    )


def _axis_weights(coords: np.ndarray, center: float, radius: float) -> np.ndarray:
    return np.exp(-((coords - center) ** 2) / radius**2)


def _axis_coverage(coords: np.ndarray, pitch: float, center: float, radius: float) -> float:
    # fraction of the continuous weight integral inside the grid span
    lo = coords[0] - 0.5 * pitch
    hi = coords[-1] + 0.5 * pitch
    return 0.5 * (erf((hi - center) / radius) - erf((lo - center) / radius))


def effective_profile(
    field: AlloyField,
    dot: DotGeometry,
    *,
    constants: MaterialConstants = SILICON,
    max_truncation: float = 1e-6,
) -> ConcentrationProfile:
    """Concentration profile a dot feels inside one alloy realization.

    Per layer, averages the site occupations with the dot's in-plane
    density as weight. The background is inherited from the parent
    profile, so the oscillatory part carries both the sampled oscillation
    and the disorder fluctuations of the barrier alloy.
    """
    rx = dot.radius_x(constants)
    ry = dot.radius_y(constants)
    pitch = constants.site_spacing
    cov_x = _axis_coverage(field.x, pitch, dot.center_x_nm, rx)
    cov_y = _axis_coverage(field.y, pitch, dot.center_y_nm, ry)
    lost = 1.0 - cov_x * cov_y
    if lost > max_truncation:
        raise ExtentTooSmall(
            f"site grid truncates {lost:.2e} of the dot weight "
            f"(limit {max_truncation:.0e}); enlarge the extent or recenter it"
        )

    wx = _axis_weights(field.x, dot.center_x_nm, rx)
    wy = _axis_weights(field.y, dot.center_y_nm, ry)
    weights = np.outer(wx, wy).ravel()
    weights /= weights.sum()

    layers = field.occupancy.shape[0]
    felt = np.empty(layers, dtype=float)
    for layer in range(layers):
        felt[layer] = weights @ field.occupancy[layer].ravel().astype(float)

    return ConcentrationProfile(
        z=field.z.copy(),
        total=felt,
        background=field.profile.background.copy(),
        interface_z=field.profile.interface_z,
        spec=field.profile.spec,
        sampled=True,
    )


@dataclass(frozen=True)
class EnsembleSample:
    index: int
    seed: int
    orbital_energy_mev: float
    splitting_ev: float


def _sorted_stats(values: np.ndarray) -> dict[str, float]:
    # statistics on the sorted copy are invariant under sample permutation
    ordered = np.sort(np.asarray(values, dtype=float))
    return {
        "n": int(ordered.size),
        "mean_ev": float(np.mean(ordered)),
        "std_ev": float(np.std(ordered, ddof=1)) if ordered.size > 1 else 0.0,
        "p5_ev": float(np.percentile(ordered, 5)),
        "p25_ev": float(np.percentile(ordered, 25)),
        "p75_ev": float(np.percentile(ordered, 75)),
        "p95_ev": float(np.percentile(ordered, 95)),
    }


@dataclass(eq=False)
class DisorderEnsemble:
    """Splitting statistics over independent alloy realizations."""

    samples: list[EnsembleSample]
    base_seed: int
    extent: tuple[float, float]

    def splittings(self) -> np.ndarray:
        return np.array([s.splitting_ev for s in self.samples])

    def summary(self) -> dict[str, float]:
        return _sorted_stats(self.splittings())

    def to_csv(self, path) -> None:
        header = [
            "# columns: sample index, seed, orbital energy (meV), splitting (eV, ueV)",
            "sample_index,seed,E_orb_meV,E_v_eV,E_v_ueV",
        ]
        lines = [
            f"{s.index},{s.seed},{float(s.orbital_energy_mev)!r},"
            f"{float(s.splitting_ev)!r},{float(s.splitting_ev * 1e6)!r}"
            for s in self.samples
        ]
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(header + lines) + "\n")


def _ensemble_sample(args) -> EnsembleSample:
    spec, model, dot, extent, center, index, seed = args
    profile = build_profile(spec, model.constants)
    field = sample_alloy_field(
        profile, seed, extent=extent, center=center, constants=model.constants
    )
    felt = effective_profile(field, dot, constants=model.constants)
    result = model.splitting_for_profile(felt)
    return EnsembleSample(
        index=index,
        seed=seed,
        orbital_energy_mev=dot.orbital_energy_mev,
        splitting_ev=result.splitting_ev,
    )


def ensemble(
    spec: ProfileSpec,
    model: ValleyModel,
    dot: DotGeometry,
    n_samples: int,
    base_seed: int,
    *,
    extent: tuple[float, float] = (120.0, 120.0),
    workers: int = 1,
) -> DisorderEnsemble:
    """Independent disorder realizations of one structure.

    Sample ``k`` uses seed ``base_seed + k``; every sample is a pure
    function of its seed, so worker count cannot change any value.
    """
    if n_samples < 1:
        raise ConfigError(f"n_samples must be at least 1, got {n_samples}")
    if spec.points_per_monolayer != 1:
        spec = replace(spec, points_per_monolayer=1)
    center = (dot.center_x_nm, dot.center_y_nm)
    jobs = [
        (spec, model, dot, extent, center, k, base_seed + k) for k in range(n_samples)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            samples = list(pool.map(_ensemble_sample, jobs))
    else:
        samples = [_ensemble_sample(job) for job in jobs]
    return DisorderEnsemble(samples=samples, base_seed=base_seed, extent=extent)


@dataclass(frozen=True)
class SweepPoint:
    case: str
    seed: int
    sweep_param: float
    y_nm: float
    orbital_energy_mev: float
    splitting_ev: float


def case1_sweep(
    field: AlloyField,
    model: ValleyModel,
    dot: DotGeometry,
    *,
    y0_range_nm: float = 20.0,
    energy_span_mev: tuple[float, float] = (1.0, 2.0),
    n_points: int = 2,
    label: str = "case1",
) -> list[SweepPoint]:
    """Move and squeeze the dot together through one frozen realization.

    A single sweep parameter t in [0, 1] drives both knobs linearly: the
    dot center slides from y0 to y0 + y0_range_nm while the confinement
    energy along x goes through ``energy_span_mev``. The y confinement is
    left at the template value, so each t sees a fresh patch of alloy
    with a different averaging volume.
    """
    lo, hi = energy_span_mev
    if lo <= 0.0 or hi <= 0.0:
        raise ConfigError("energy span must be positive")
    if n_points < 1:
        raise ConfigError(f"n_points must be at least 1, got {n_points}")
    points = []
    for t in np.linspace(0.0, 1.0, n_points):
        setting = replace(
            dot,
            center_y_nm=dot.center_y_nm + float(t) * y0_range_nm,
            energy_x_mev=lo + float(t) * (hi - lo),
        )
        felt = effective_profile(field, setting, constants=model.constants)
        result = model.splitting_for_profile(felt)
        points.append(
            SweepPoint(
                case=label,
                seed=field.seed,
                sweep_param=float(t),
                y_nm=setting.center_y_nm,
                orbital_energy_mev=setting.energy_x_mev,
                splitting_ev=result.splitting_ev,
            )
        )
    return points


def case2_sweep(
    field: AlloyField,
    model: ValleyModel,
    dot: DotGeometry,
    *,
    energy_span_mev: tuple[float, float] = (1.0, 2.0),
    n_points: int = 2,
) -> list[SweepPoint]:
    """Squeeze the dot in place: the zero-drift limit of case 1."""
    return case1_sweep(
        field,
        model,
        dot,
        y0_range_nm=0.0,
        energy_span_mev=energy_span_mev,
        n_points=n_points,
        label="case2",
    )


@dataclass(eq=False)
class DotSweepStudy:
    """Both sweep protocols over a set of shared realizations."""

    points: list[SweepPoint]
    base_seed: int

    def case_points(self, case: str) -> list[SweepPoint]:
        return [p for p in self.points if p.case == case]

    def aligned_changes(self, case: str) -> np.ndarray:
        """Per-seed splitting change from the first sweep point, sorted.

        Aligning every track at its small-dot end isolates how much the
        splitting moves over the sweep, seed by seed.
        """
        pts = self.case_points(case)
        seeds = sorted({p.seed for p in pts})
        changes = []
        for seed in seeds:
            track = sorted(
                (p for p in pts if p.seed == seed), key=lambda p: p.sweep_param
            )
            changes.append(track[-1].splitting_ev - track[0].splitting_ev)
        return np.sort(np.asarray(changes, dtype=float))

    def summary(self) -> dict:
        out: dict = {}
        for case in ("case1", "case2"):
            pts = self.case_points(case)
            if not pts:
                continue
            seeds = sorted({p.seed for p in pts})
            first, last = [], []
            for seed in seeds:
                track = sorted(
                    (p for p in pts if p.seed == seed), key=lambda p: p.sweep_param
                )
                first.append(track[0].splitting_ev)
                last.append(track[-1].splitting_ev)
            changes = self.aligned_changes(case)
            out[case] = {
                "n_seeds": len(seeds),
                "mean_start_ev": float(np.mean(np.sort(first))),
                "mean_end_ev": float(np.mean(np.sort(last))),
                "change_std_ev": float(np.std(changes, ddof=1))
                if changes.size > 1
                else 0.0,
                "change_span_ev": float(changes[-1] - changes[0]),
                "change_mean_ev": float(np.mean(changes)),
            }
        return out

    def to_csv(self, path) -> None:
        header = [
            "# columns: protocol, seed, sweep parameter, dot center y (nm), "
            "orbital energy (meV), splitting (eV, ueV)",
            "case,seed,sweep_param,y0_nm,E_orb_meV,E_v_eV,E_v_ueV",
        ]
        lines = [
            f"{p.case},{p.seed},{float(p.sweep_param)!r},{float(p.y_nm)!r},"
            f"{float(p.orbital_energy_mev)!r},{float(p.splitting_ev)!r},"
            f"{float(p.splitting_ev * 1e6)!r}"
            for p in self.points
        ]
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(header + lines) + "\n")


def _study_extent(
    dot: DotGeometry,
    y0_range_nm: float,
    energy_span_mev: tuple[float, float],
    constants: MaterialConstants,
) -> tuple[tuple[float, float], tuple[float, float]]:
    # cover the widest dot (the softest x confinement visited) at every
    # position; the y radius never changes during either sweep
    rx = _orbital_radius(min(dot.energy_x_mev, *energy_span_mev), constants)
    ry = _orbital_radius(dot.energy_y_mev, constants)
    lx = 2.0 * _SAFE_RADII * rx
    ly = abs(y0_range_nm) + 2.0 * _SAFE_RADII * ry
    cx = dot.center_x_nm
    cy = dot.center_y_nm + 0.5 * y0_range_nm
    return (lx, ly), (cx, cy)


def _study_seed(args) -> list[SweepPoint]:
    spec, model, dot, y0_range, span, n_points, extent, center, seed = args
    profile = build_profile(spec, model.constants)
    field = sample_alloy_field(
        profile, seed, extent=extent, center=center, constants=model.constants
    )
    rows = case1_sweep(
        field, model, dot, y0_range_nm=y0_range, energy_span_mev=span, n_points=n_points
    )
    rows += case2_sweep(field, model, dot, energy_span_mev=span, n_points=n_points)
    return rows


def dot_sweep_study(
    spec: ProfileSpec,
    model: ValleyModel,
    dot: DotGeometry,
    n_seeds: int,
    base_seed: int,
    *,
    y0_range_nm: float = 20.0,
    energy_span_mev: tuple[float, float] = (1.0, 2.0),
    n_points: int = 2,
    extent: tuple[float, float] | None = None,
    workers: int = 1,
) -> DotSweepStudy:
    """Run both sweep protocols on shared realizations.

    Each seed freezes one alloy realization large enough for every dot
    position and size visited, then both protocols walk through it. The
    contrast between them separates what moving onto fresh alloy does to
    the splitting from what squeezing alone does.
    """
    if n_seeds < 1:
        raise ConfigError(f"n_seeds must be at least 1, got {n_seeds}")
    if spec.points_per_monolayer != 1:
        spec = replace(spec, points_per_monolayer=1)
    auto_extent, center = _study_extent(dot, y0_range_nm, energy_span_mev, model.constants)
    if extent is None:
        extent = auto_extent
    jobs = [
        (spec, model, dot, y0_range_nm, energy_span_mev, n_points, extent, center, base_seed + k)
        for k in range(n_seeds)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_study_seed, jobs))
    else:
        chunks = [_study_seed(job) for job in jobs]
    points: list[SweepPoint] = []
    for chunk in chunks:
        points.extend(chunk)
    return DotSweepStudy(points=points, base_seed=base_seed)
