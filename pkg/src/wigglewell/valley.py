"""Intervalley coupling and valley splitting.

The two conduction valleys along the growth axis are connected by any
potential component that supplies the large wavevector separating them.
Bulk Bloch factors of the valley states carry reciprocal lattice content,
so the product of two Bloch coefficients lets a slow real-space potential
bridge the valleys either directly or through an Umklapp step. Summing
coefficient products over pairs that share their in-plane wavevector
collapses the double sum into a handful of coupling channels, one per
growth-axis reciprocal lattice offset. Each channel weighs a plane-wave
moment of the envelope density times the oscillating alloy potential.

Two routes to the splitting are provided. The perturbative route evaluates
the coupling integral on the ground envelope and doubles its magnitude.
The two-component route diagonalizes both valley envelopes coupled by the
channel kernel and reports the doublet gap. They agree in the weak
coupling regime and are kept separate on purpose.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from importlib import resources

import numpy as np
from scipy.linalg import eigvals_banded

from .constants import SILICON, MaterialConstants
from .envelope import EnvelopeSolution, solve_envelope
from .errors import ConfigError, GridTooCoarse, NotConfined
from .heterostructure import (
    ConcentrationProfile,
    PotentialProfile,
    ProfileSpec,
    build_profile,
    potential_from_profile,
)

__all__ = [
    "BlochCoefficientTable",
    "ValleyCouplingResult",
    "ValleySplittingCurve",
    "ValleyModel",
    "coupling_channels",
    "intervalley_coupling",
    "coupling_from_potential",
    "intervalley_element",
    "two_component_spectrum",
    "scan_q",
    "local_maxima",
    "resolve_table",
]

_BUNDLED_TABLES = {
    "si_symmetric": "si_valley_symmetric.csv",
    "si_broken": "si_valley_broken.csv",
}

_TABLE_COLUMNS = (
    "kx",
    "ky",
    "kz",
    "re_c_plus",
    "im_c_plus",
    "re_c_minus",
    "im_c_minus",
)


@dataclass(eq=False)
class BlochCoefficientTable:
    """Plane-wave coefficients of the two valley Bloch factors.

    ``k_vectors`` holds reciprocal lattice points in units of 2*pi/a,
    one row per plane wave shared by both columns. A trimmed table is
    acceptable as long as each family keeps at least 95 percent of its
    weight; anything lighter indicates a broken export.
    """

    k_vectors: np.ndarray
    c_plus: np.ndarray
    c_minus: np.ndarray
    source_label: str = ""

    def __post_init__(self) -> None:
        self.k_vectors = np.atleast_2d(np.asarray(self.k_vectors, dtype=float))
        self.c_plus = np.atleast_1d(np.asarray(self.c_plus, dtype=complex))
        self.c_minus = np.atleast_1d(np.asarray(self.c_minus, dtype=complex))
        n = self.k_vectors.shape[0]
        if self.k_vectors.shape != (n, 3):
            raise ConfigError(f"k_vectors must be (n, 3), got {self.k_vectors.shape}")
        if self.c_plus.shape != (n,) or self.c_minus.shape != (n,):
            raise ConfigError("coefficient arrays must match the number of k vectors")
        if not (
            np.all(np.isfinite(self.k_vectors))
            and np.all(np.isfinite(self.c_plus))
            and np.all(np.isfinite(self.c_minus))
        ):
            raise ConfigError("table contains non-finite entries")
        keys = {tuple(np.round(row, 6)) for row in self.k_vectors}
        if len(keys) != n:
            raise ConfigError("duplicate k vectors in table")
        for name, norm in zip(("c_plus", "c_minus"), self.normalization()):
            if not 0.95 <= norm <= 1.0 + 1e-6:
                raise ConfigError(
                    f"{name} weight {norm:.6f} outside [0.95, 1]; "
                    "table is over-trimmed or not normalized"
                )

    def __len__(self) -> int:
        return self.k_vectors.shape[0]

    def normalization(self) -> tuple[float, float]:
        return (
            float(np.sum(np.abs(self.c_plus) ** 2)),
            float(np.sum(np.abs(self.c_minus) ** 2)),
        )

    @classmethod
    def single_coefficient(cls) -> "BlochCoefficientTable":
        """Minimal table: pure plane-wave valleys, one direct channel."""
        return cls(
            k_vectors=np.zeros((1, 3)),
            c_plus=np.ones(1, dtype=complex),
            c_minus=np.ones(1, dtype=complex),
            source_label="single coefficient",
        )

    @classmethod
    def from_csv(cls, path) -> "BlochCoefficientTable":
        label = ""
        rows: list[dict[str, str]] = []
        with open(path, newline="", encoding="utf-8") as fh:
            header: list[str] | None = None
            for raw in csv.reader(fh):
                if not raw:
                    continue
                if raw[0].lstrip().startswith("#"):
                    text = ",".join(raw).lstrip("# ").strip()
                    if text.startswith("source_label:"):
                        label = text.split(":", 1)[1].strip()
                    continue
                if header is None:
                    header = [c.strip() for c in raw]
                    missing = [c for c in _TABLE_COLUMNS if c not in header]
                    if missing:
                        raise ConfigError(f"table {path} lacks columns {missing}")
                    continue
                rows.append(dict(zip(header, (c.strip() for c in raw))))
        if not rows:
            raise ConfigError(f"table {path} has no data rows")
        k = np.array([[float(r["kx"]), float(r["ky"]), float(r["kz"])] for r in rows])
        cp = np.array([complex(float(r["re_c_plus"]), float(r["im_c_plus"])) for r in rows])
        cm = np.array([complex(float(r["re_c_minus"]), float(r["im_c_minus"])) for r in rows])
        return cls(k_vectors=k, c_plus=cp, c_minus=cm, source_label=label)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            if self.source_label:
                fh.write(f"# source_label: {self.source_label}\n")
            fh.write(",".join(_TABLE_COLUMNS) + "\n")
            for row, a, b in zip(self.k_vectors, self.c_plus, self.c_minus):
                fields = [
                    f"{float(row[0])!r}",
                    f"{float(row[1])!r}",
                    f"{float(row[2])!r}",
                    f"{float(a.real)!r}",
                    f"{float(a.imag)!r}",
                    f"{float(b.real)!r}",
                    f"{float(b.imag)!r}",
                ]
                fh.write(",".join(fields) + "\n")

    @classmethod
    def bundled(cls, name: str) -> "BlochCoefficientTable":
        if name == "single":
            return cls.single_coefficient()
        filename = _BUNDLED_TABLES.get(name)
        if filename is None:
            raise ConfigError(
                f"unknown bundled table {name!r}; choose from "
                f"{sorted(_BUNDLED_TABLES) + ['single']}"
            )
        ref = resources.files("wigglewell").joinpath("data", "tables", filename)
        with resources.as_file(ref) as path:
            return cls.from_csv(path)

    def swapped(self) -> "BlochCoefficientTable":
        """Relabel the valleys: flip every k and conjugate-exchange columns.

        This is the symmetry of swapping which valley is called plus, and
        leaves the splitting of any structure exactly unchanged.
        """
        return BlochCoefficientTable(
            k_vectors=-self.k_vectors,
            c_plus=np.conj(self.c_minus),
            c_minus=np.conj(self.c_plus),
            source_label=self.source_label,
        )

    def with_random_phases(self, seed: int) -> "BlochCoefficientTable":
        """Scramble per-coefficient phases, keeping all magnitudes.

        Destroys the interference responsible for symmetry extinctions
        while preserving every norm check.
        """
        rng = np.random.default_rng(seed)
        n = len(self)
        return BlochCoefficientTable(
            k_vectors=self.k_vectors.copy(),
            c_plus=self.c_plus * np.exp(2j * np.pi * rng.random(n)),
            c_minus=self.c_minus * np.exp(2j * np.pi * rng.random(n)),
            source_label=f"{self.source_label} (random phases)",
        )


def resolve_table(spec: str) -> BlochCoefficientTable:
    """Turn a CLI-ish table reference into a table.

    Accepts ``bundled:<name>``, a bare bundled name, or a CSV path.
    """
    if spec.startswith("bundled:"):
        return BlochCoefficientTable.bundled(spec.split(":", 1)[1])
    if spec in _BUNDLED_TABLES or spec == "single":
        return BlochCoefficientTable.bundled(spec)
    return BlochCoefficientTable.from_csv(spec)


def coupling_channels(
    table: BlochCoefficientTable,
    constants: MaterialConstants = SILICON,
    max_umklapp: int = 2,
) -> dict[float, complex]:
    """Channel weights keyed by growth-axis wavevector offset in 1/nm.

    Pairs one coefficient from each valley sharing the in-plane
    wavevector; the key is the ket minus bra growth-axis component.
    Offsets beyond ``max_umklapp`` reciprocal steps are dropped.
    """
    if max_umklapp < 0:
        raise ConfigError(f"max_umklapp must be non-negative, got {max_umklapp}")
    inplane: dict[tuple[float, float], list[int]] = {}
    for i, row in enumerate(np.round(table.k_vectors[:, :2], 6)):
        inplane.setdefault((row[0], row[1]), []).append(i)
    kz = table.k_vectors[:, 2]
    limit = 2.0 * max_umklapp + 1e-9
    sums: dict[float, complex] = {}
    for indices in inplane.values():
        for i in indices:
            for j in indices:
                offset = round(float(kz[j] - kz[i]), 6)
                if abs(offset) > limit:
                    continue
                w = np.conj(table.c_plus[i]) * table.c_minus[j]
                sums[offset] = sums.get(offset, 0j) + w
    return {offset * constants.reciprocal_unit: w for offset, w in sums.items()}


def _bridging_wavevectors(
    channels: dict[float, complex], constants: MaterialConstants
) -> dict[float, complex]:
    # channel offset minus the intervalley separation 2 k0
    gap = 2.0 * constants.valley_wavevector
    return {offset - gap: w for offset, w in channels.items()}


def _require_resolution(dz: float, top_frequency: float, where: str) -> None:
    if top_frequency <= 0.0:
        return
    needed = (2.0 * math.pi / top_frequency) / 6.0
    if dz > needed * (1.0 + 1e-9):
        raise GridTooCoarse(
            f"{where}: grid step {dz:.5f} nm gives fewer than six points per "
            f"period at {top_frequency:.2f} 1/nm; need a step of {needed:.5f} nm"
        )


def _is_continuum(profile: ConcentrationProfile | None) -> bool:
    # monolayer grids are the physical lattice: sums on them are exact by
    # construction and the six-point rule does not apply
    if profile is None or profile.spec is None:
        return True
    return profile.spec.points_per_monolayer >= 2


@dataclass(eq=False)
class ValleyCouplingResult:
    """Valley splitting plus the pieces it was assembled from."""

    splitting_ev: float
    coupling_ev: complex
    ground_energy_ev: float
    mode: str
    channel_weights: dict[float, complex]
    excited_energy_ev: float | None = None
    wavevector: float | None = None

    @property
    def splitting_uev(self) -> float:
        return self.splitting_ev * 1e6

    @property
    def q(self) -> float | None:
        """Concentration wavevector of the structure, if one was given."""
        return self.wavevector

    @property
    def delta(self) -> complex:
        """Complex coupling matrix element between the valley envelopes."""
        return self.coupling_ev

    @property
    def E_v(self) -> float:
        """Valley splitting in eV."""
        return self.splitting_ev


def intervalley_coupling(
    z: np.ndarray,
    density: np.ndarray,
    oscillation_potential: np.ndarray,
    table: BlochCoefficientTable,
    *,
    oscillation_wavevector: float = 0.0,
    constants: MaterialConstants = SILICON,
    max_umklapp: int = 2,
    enforce_resolution: bool = True,
) -> complex:
    """Coupling matrix element between the two valley envelopes.

    Sums, channel by channel, the plane-wave moment of the envelope
    density times the oscillating alloy potential at the wavevector each
    channel needs to bridge the valleys.
    """
    z = np.asarray(z, dtype=float)
    density = np.asarray(density, dtype=float)
    vosc = np.asarray(oscillation_potential, dtype=float)
    if not (z.shape == density.shape == vosc.shape):
        raise ConfigError("z, density, and potential must share one grid")
    channels = _bridging_wavevectors(
        coupling_channels(table, constants, max_umklapp), constants
    )
    if enforce_resolution:
        dz = float(z[1] - z[0])
        top = max(abs(k) for k in channels) + abs(oscillation_wavevector)
        _require_resolution(dz, top, "intervalley coupling")
    total = 0j
    for k, w in channels.items():
        total += w * np.trapezoid(density * np.exp(1j * k * z) * vosc, z)
    return total


def coupling_from_potential(
    envelope: EnvelopeSolution,
    potential: PotentialProfile,
    table: BlochCoefficientTable,
    *,
    constants: MaterialConstants = SILICON,
    max_umklapp: int = 2,
    state: int = 0,
) -> ValleyCouplingResult:
    """Perturbative splitting from an envelope and its band profile."""
    spec = potential.profile.spec
    q = spec.resolved_wavevector() if spec is not None else 0.0
    delta = intervalley_coupling(
        envelope.z,
        envelope.density(state),
        potential.oscillation_term,
        table,
        oscillation_wavevector=q,
        constants=constants,
        max_umklapp=max_umklapp,
        enforce_resolution=_is_continuum(potential.profile),
    )
    return ValleyCouplingResult(
        splitting_ev=2.0 * abs(delta),
        coupling_ev=delta,
        ground_energy_ev=float(envelope.energies[state]),
        mode="perturbative",
        channel_weights=coupling_channels(table, constants, max_umklapp),
        wavevector=q if spec is not None else None,
    )


def intervalley_element(
    envelope: EnvelopeSolution,
    table: BlochCoefficientTable,
    amplitude: float,
    wavevector: float,
    *,
    well_offset: float = 0.0,
    phase_origin: float = 0.0,
    constants: MaterialConstants = SILICON,
    max_umklapp: int = 2,
    state: int = 0,
) -> ValleyCouplingResult:
    """Perturbative splitting for an unwindowed cosine concentration.

    Splits the cosine into its three spectral lines analytically, so each
    channel needs only plane-wave moments of the envelope density. Serves
    as the independent cross-check of the grid route wherever the envelope
    mass sits well inside the oscillating region.
    """
    if amplitude < 0.0:
        raise ConfigError(f"amplitude must be non-negative, got {amplitude}")
    if wavevector <= 0.0 and amplitude > 0.0:
        raise ConfigError(f"wavevector must be positive, got {wavevector}")
    z = envelope.z
    density = envelope.density(state)
    dz = envelope.dz
    channels = _bridging_wavevectors(
        coupling_channels(table, constants, max_umklapp), constants
    )
    top = max(abs(k) for k in channels) + abs(wavevector)
    _require_resolution(dz, top, "oscillation coupling")

    def moment(k: float) -> complex:
        return complex(np.trapezoid(density * np.exp(1j * k * z), z))

    v0 = constants.alloy_shift
    q = wavevector
    z0 = phase_origin
    delta = 0j
    for k, w in channels.items():
        direct = (0.5 * amplitude + well_offset) * moment(k)
        lines = 0.25 * amplitude * (
            np.exp(1j * q * z0) * moment(k - q) + np.exp(-1j * q * z0) * moment(k + q)
        )
        delta += w * v0 * (direct - lines)
    return ValleyCouplingResult(
        splitting_ev=2.0 * abs(delta),
        coupling_ev=delta,
        ground_energy_ev=float(envelope.energies[state]),
        mode="perturbative",
        channel_weights=coupling_channels(table, constants, max_umklapp),
        wavevector=wavevector,
    )


def two_component_spectrum(
    potential: PotentialProfile,
    table: BlochCoefficientTable,
    *,
    mass: float | None = None,
    constants: MaterialConstants = SILICON,
    max_umklapp: int = 2,
) -> ValleyCouplingResult:
    """Doublet gap of the two coupled valley envelopes.

    Solves the pair of envelope equations coupled by the channel kernel on
    the same grid as the band profile and reports the gap between the two
    lowest states. Makes no weak-coupling assumption.
    """
    z = potential.z
    v = potential.total
    dz = potential.dz
    m = constants.mass_longitudinal if mass is None else float(mass)
    spec = potential.profile.spec
    q = spec.resolved_wavevector() if spec is not None else 0.0
    channels = _bridging_wavevectors(
        coupling_channels(table, constants, max_umklapp), constants
    )
    if _is_continuum(potential.profile):
        top = max(abs(k) for k in channels) + abs(q)
        _require_resolution(dz, top, "two-component solve")

    kernel = np.zeros(z.size, dtype=complex)
    for k, w in channels.items():
        kernel += w * np.exp(1j * k * z)
    kernel *= potential.oscillation_term

    t = constants.hbar2_over_2m0 / (m * dz * dz)
    n2 = 2 * z.size
    bands = np.zeros((3, n2), dtype=complex)
    bands[2, 0::2] = v + 2.0 * t
    bands[2, 1::2] = v + 2.0 * t
    bands[1, 1::2] = kernel
    bands[0, 2:] = -t
    energies = eigvals_banded(
        bands, lower=False, select="i", select_range=(0, 1), overwrite_a_band=True
    )

    edge = min(float(v[0]), float(v[-1]))
    if energies[0] >= edge:
        raise NotConfined(
            f"ground doublet at {energies[0]:.6f} eV reaches the boundary "
            f"potential {edge:.6f} eV; enlarge the domain"
        )

    ground = solve_envelope((z, v), 1, m, constants)
    delta = complex(np.sum(ground.density(0) * kernel) * dz)
    return ValleyCouplingResult(
        splitting_ev=float(energies[1] - energies[0]),
        coupling_ev=delta,
        ground_energy_ev=float(energies[0]),
        mode="two_component",
        channel_weights=coupling_channels(table, constants, max_umklapp),
        excited_energy_ev=float(energies[1]),
        wavevector=q if spec is not None else None,
    )


@dataclass(frozen=True, eq=False)
class ValleyModel:
    """Everything needed to turn a concentration profile into a splitting."""

    table: BlochCoefficientTable
    mode: str = "perturbative"
    field_mv_per_m: float = 8.5
    barrier_height_ev: float = 0.15
    barrier_width_nm: float = 1.0
    max_umklapp: int = 2
    mass: float | None = None
    constants: MaterialConstants = SILICON

    def __post_init__(self) -> None:
        mode = self.mode.replace("-", "_")
        if mode not in ("perturbative", "two_component"):
            raise ConfigError(
                f"mode must be 'perturbative' or 'two_component', got {self.mode!r}"
            )
        object.__setattr__(self, "mode", mode)

    def potential(self, profile: ConcentrationProfile) -> PotentialProfile:
        return potential_from_profile(
            profile,
            field_mv_per_m=self.field_mv_per_m,
            barrier_height_ev=self.barrier_height_ev,
            barrier_width_nm=self.barrier_width_nm,
            constants=self.constants,
        )

    def splitting_for_profile(self, profile: ConcentrationProfile) -> ValleyCouplingResult:
        potential = self.potential(profile)
        if self.mode == "two_component":
            return two_component_spectrum(
                potential,
                self.table,
                mass=self.mass,
                constants=self.constants,
                max_umklapp=self.max_umklapp,
            )
        envelope = solve_envelope(potential, 1, self.mass, self.constants)
        return coupling_from_potential(
            envelope,
            potential,
            self.table,
            constants=self.constants,
            max_umklapp=self.max_umklapp,
        )

    def splitting_for_spec(self, spec: ProfileSpec) -> ValleyCouplingResult:
        return self.splitting_for_profile(build_profile(spec, self.constants))


def local_maxima(x: np.ndarray, y: np.ndarray) -> list[tuple[float, float]]:
    """Strict interior maxima of a sampled curve, highest first."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    peaks = [
        (float(x[i]), float(y[i]))
        for i in range(1, len(y) - 1)
        if y[i] > y[i - 1] and y[i] >= y[i + 1]
    ]
    peaks.sort(key=lambda p: -p[1])
    return peaks


@dataclass(eq=False)
class ValleySplittingCurve:
    """Splitting versus concentration wavevector."""

    wavevectors: np.ndarray
    splitting_ev: np.ndarray
    mode: str
    metadata: dict

    def __post_init__(self) -> None:
        self.wavevectors = np.asarray(self.wavevectors, dtype=float)
        self.splitting_ev = np.asarray(self.splitting_ev, dtype=float)
        if self.wavevectors.shape != self.splitting_ev.shape:
            raise ConfigError("curve axes must have matching lengths")
        if self.wavevectors.size and np.any(np.diff(self.wavevectors) <= 0.0):
            raise ConfigError("curve wavevectors must be strictly increasing")

    @property
    def q_values(self) -> np.ndarray:
        return self.wavevectors

    @property
    def E_v_values(self) -> np.ndarray:
        return self.splitting_ev

    def global_max(self) -> tuple[float, float]:
        i = int(np.argmax(self.splitting_ev))
        return float(self.wavevectors[i]), float(self.splitting_ev[i])

    def peaks(self) -> list[tuple[float, float]]:
        return local_maxima(self.wavevectors, self.splitting_ev)

    def to_csv(self, path) -> None:
        header = [
            "# columns: concentration wavevector (1/nm), splitting (eV), splitting (ueV)",
            "q_inv_nm,E_v_eV,E_v_ueV",
        ]
        rows = np.column_stack(
            [self.wavevectors, self.splitting_ev, self.splitting_ev * 1e6]
        )
        body = "\n".join(",".join(f"{float(v)!r}" for v in row) for row in rows)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(header) + "\n" + body + "\n")


def _scan_point(args) -> float:
    template, q, model = args
    spec = replace(template, wavevector=q, wavelength=None)
    return model.splitting_for_spec(spec).splitting_ev


def scan_q(
    template: ProfileSpec,
    q_values,
    model: ValleyModel,
    workers: int = 1,
) -> ValleySplittingCurve:
    """Splitting curve over a set of concentration wavevectors.

    Each point rebuilds the profile from the template with the wavevector
    replaced, so every point is independent; the result does not depend on
    worker count or evaluation order.
    """
    q_values = np.asarray(list(q_values), dtype=float)
    if q_values.size == 0:
        raise ConfigError("scan needs at least one wavevector")
    if np.any(q_values <= 0.0):
        raise ConfigError("scan wavevectors must be positive")
    if np.any(np.diff(q_values) <= 0.0):
        raise ConfigError("scan wavevectors must be strictly increasing")
    jobs = [(template, float(q), model) for q in q_values]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(_scan_point, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        values = [_scan_point(job) for job in jobs]
    splitting = np.asarray(values, dtype=float)
    top = int(np.argmax(splitting))
    meta = {
        "mode": model.mode,
        "table": model.table.source_label,
        "field_mv_per_m": model.field_mv_per_m,
        "amplitude_peak": template.amplitude,
        "amplitude_average": template.amplitude_average,
        "global_max": {
            "q_inv_nm": float(q_values[top]),
            "E_v_eV": float(splitting[top]),
        },
        "peaks": [
            {"q_inv_nm": q, "E_v_eV": h}
            for q, h in local_maxima(q_values, splitting)[:5]
        ],
    }
    return ValleySplittingCurve(
        wavevectors=q_values, splitting_ev=splitting, mode=model.mode, metadata=meta
    )
