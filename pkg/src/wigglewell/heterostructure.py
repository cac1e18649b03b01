"""Ge concentration profiles and the electrostatic potential built from them.

A structure is described in a local coordinate where the top interface of
the quantum well sits at zero and the well extends to negative positions.
The profile is the sum of a smooth barrier background and an oscillating
well concentration; both are graded across the interfaces. The potential
has three additive parts: a linear electric field term, a barrier band
step, and the alloy term proportional to the oscillating concentration
alone. The barrier background never enters the deterministic potential;
its band offset is modeled by the explicit step term.

Amplitude convention: ``amplitude`` is the peak concentration of the
oscillation, which runs from 0 to ``amplitude`` (plus any well baseline).
The spatial average over a period is half the peak. Writers record both
numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .constants import MV_PER_M_TO_EV_PER_NM, SILICON, MaterialConstants
from .errors import ConfigError, DegenerateGrid

__all__ = [
    "ProfileSpec",
    "ConcentrationProfile",
    "PotentialProfile",
    "build_profile",
    "potential_from_profile",
]


@dataclass(frozen=True)
class ProfileSpec:
    """Declarative description of a concentration profile.

    Exactly one of ``wavevector`` (1/nm) and ``wavelength`` (nm) may be
    given unless ``amplitude`` is zero. ``barrier_ge`` left as None
    resolves to the well peak concentration plus 0.25. ``phase_origin``
    is measured from the top interface; None places the cosine minimum at
    the well bottom. ``points_per_monolayer`` of 1 yields the lattice
    grid used for atomistic sampling; larger values yield continuum grids.
    """

    amplitude: float = 0.05
    wavevector: float | None = None
    wavelength: float | None = None
    well_width: float = 12.0
    well_offset: float = 0.0
    barrier_ge: float | None = None
    interface_width: float = 1.0
    interface_shape: str = "tanh"
    phase_origin: float | None = None
    extent_below: float = 18.0
    extent_above: float = 10.0
    points_per_monolayer: int = 12
    z_offset: float = 0.0

    def __post_init__(self) -> None:
        if self.well_width <= 0.0:
            raise ConfigError(f"well_width must be positive, got {self.well_width}")
        if not 0.0 <= self.amplitude <= 1.0:
            raise ConfigError(f"amplitude must lie in [0, 1], got {self.amplitude}")
        if self.amplitude + self.well_offset > 1.0:
            raise ConfigError(
                "peak well concentration exceeds 1: "
                f"amplitude {self.amplitude} + well_offset {self.well_offset}"
            )
        if self.well_offset < 0.0:
            raise ConfigError(f"well_offset must be non-negative, got {self.well_offset}")
        if self.wavevector is not None and self.wavelength is not None:
            raise ConfigError("give either wavevector or wavelength, not both")
        if self.wavevector is None and self.wavelength is None and self.amplitude != 0.0:
            raise ConfigError("an oscillation needs a wavevector or a wavelength")
        if self.wavevector is not None and self.wavevector <= 0.0:
            raise ConfigError(f"wavevector must be positive, got {self.wavevector}")
        if self.wavelength is not None and self.wavelength <= 0.0:
            raise ConfigError(f"wavelength must be positive, got {self.wavelength}")
        if self.barrier_ge is not None and not 0.0 <= self.barrier_ge <= 1.0:
            raise ConfigError(f"barrier_ge must lie in [0, 1], got {self.barrier_ge}")
        if self.interface_width <= 0.0:
            raise ConfigError(f"interface_width must be positive, got {self.interface_width}")
        if self.interface_shape not in ("tanh", "linear"):
            raise ConfigError(f"interface_shape must be 'tanh' or 'linear', got {self.interface_shape!r}")
        if self.extent_below <= 0.0 or self.extent_above <= 0.0:
            raise ConfigError("extents must be positive")
        if self.points_per_monolayer < 1:
            raise ConfigError("points_per_monolayer must be at least 1")

    @classmethod
    def from_average_amplitude(cls, average: float, **kwargs) -> "ProfileSpec":
        """Build a spec from the period-averaged concentration instead of the peak."""
        return cls(amplitude=2.0 * average, **kwargs)

    def resolved_wavevector(self) -> float:
        if self.wavevector is not None:
            return self.wavevector
        if self.wavelength is not None:
            return 2.0 * math.pi / self.wavelength
        return 0.0

    def resolved_barrier_ge(self) -> float:
        if self.barrier_ge is not None:
            return self.barrier_ge
        return min(1.0, self.amplitude + self.well_offset + 0.25)

    def resolved_phase_origin(self) -> float:
        if self.phase_origin is not None:
            return self.phase_origin
        return -self.well_width

    @property
    def amplitude_average(self) -> float:
        return 0.5 * self.amplitude


def _edge_up(s: np.ndarray, width: float, shape: str) -> np.ndarray:
    # smoothed unit step rising through s = 0
    if shape == "tanh":
        return 0.5 * (1.0 + np.tanh(s / width))
    return np.clip(s / width + 0.5, 0.0, 1.0)


@dataclass(eq=False)
class ConcentrationProfile:
    """Ge fraction on a monolayer-aligned grid.

    ``total`` is the full concentration, ``background`` the smooth barrier
    part; their difference is the oscillating part that couples valleys.
    ``sampled`` marks profiles obtained from an atomistic realization, for
    which grid refinement is not meaningful.
    """

    z: np.ndarray
    total: np.ndarray
    background: np.ndarray
    interface_z: float
    spec: ProfileSpec | None = None
    sampled: bool = False

    def __post_init__(self) -> None:
        self.z = np.asarray(self.z, dtype=float)
        self.total = np.asarray(self.total, dtype=float)
        self.background = np.asarray(self.background, dtype=float)
        if self.z.ndim != 1 or self.z.size < 3:
            raise DegenerateGrid(f"profile grid needs at least 3 points, got {self.z.size}")
        if self.total.shape != self.z.shape or self.background.shape != self.z.shape:
            raise ConfigError("profile arrays must share one grid")

    @property
    def dz(self) -> float:
        return float(self.z[1] - self.z[0])

    @property
    def oscillatory(self) -> np.ndarray:
        return self.total - self.background

    def to_csv(self, path) -> None:
        header = ["# columns: position (nm), total Ge fraction"]
        if self.spec is not None:
            header.append(f"# amplitude_peak: {self.spec.amplitude!r}")
            header.append(f"# amplitude_average: {self.spec.amplitude_average!r}")
        header.append("z_nm,ge_fraction")
        body = "\n".join(
            f"{float(zi)!r},{float(xi)!r}" for zi, xi in zip(self.z, self.total)
        )
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(header) + "\n" + body + "\n")


def build_profile(spec: ProfileSpec, constants: MaterialConstants = SILICON) -> ConcentrationProfile:
    """Evaluate a spec on its monolayer-aligned grid.

    The profile is computed in structure-local coordinates, so shifting
    ``z_offset`` translates the output bit for bit.
    """
    dz = constants.monolayer / spec.points_per_monolayer
    n_lo = int(round((spec.well_width + spec.extent_below) / dz))
    n_hi = int(round(spec.extent_above / dz))
    s = np.arange(-n_lo, n_hi + 1, dtype=float) * dz

    w = spec.interface_width
    shape = spec.interface_shape
    well_window = _edge_up(s + spec.well_width, w, shape) * (1.0 - _edge_up(s, w, shape))
    background = spec.resolved_barrier_ge() * (1.0 - well_window)

    q = spec.resolved_wavevector()
    if spec.amplitude > 0.0:
        phase = q * (s - spec.resolved_phase_origin())
        ripple = 0.5 * spec.amplitude * (1.0 - np.cos(phase))
    else:
        ripple = np.zeros_like(s)
    oscillation = (ripple + spec.well_offset) * well_window

    total = np.clip(oscillation + background, 0.0, 1.0)
    return ConcentrationProfile(
        z=s + spec.z_offset,
        total=total,
        background=background,
        interface_z=spec.z_offset,
        spec=spec,
    )


@dataclass(eq=False)
class PotentialProfile:
    """Conduction band profile split into its three physical parts, eV."""

    z: np.ndarray
    field_term: np.ndarray
    barrier_term: np.ndarray
    oscillation_term: np.ndarray
    profile: ConcentrationProfile
    field_mv_per_m: float
    barrier_height_ev: float
    barrier_width_nm: float

    @property
    def total(self) -> np.ndarray:
        return self.field_term + self.barrier_term + self.oscillation_term

    @property
    def dz(self) -> float:
        return float(self.z[1] - self.z[0])

    def refine(
        self, factor: int = 2, constants: MaterialConstants = SILICON
    ) -> "PotentialProfile":
        """Rebuild everything on a grid ``factor`` times finer.

        Only works for profiles that came from a spec; sampled profiles
        live on the physical lattice and have no finer version.
        """
        if self.profile.spec is None or self.profile.sampled:
            raise ConfigError("refinement needs a deterministic profile with a spec")
        fine = replace(
            self.profile.spec,
            points_per_monolayer=self.profile.spec.points_per_monolayer * int(factor),
        )
        return potential_from_profile(
            build_profile(fine, constants),
            field_mv_per_m=self.field_mv_per_m,
            barrier_height_ev=self.barrier_height_ev,
            barrier_width_nm=self.barrier_width_nm,
            constants=constants,
        )

    def to_csv(self, path) -> None:
        header = [
            "# columns: position (nm), field term, barrier step, alloy oscillation, total (eV)",
            "z_nm,V_F,V_B,V_osc,V_total",
        ]
        rows = np.column_stack(
            [self.z, self.field_term, self.barrier_term, self.oscillation_term, self.total]
        )
        body = "\n".join(",".join(f"{float(v)!r}" for v in row) for row in rows)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(header) + "\n" + body + "\n")


def potential_from_profile(
    profile: ConcentrationProfile,
    *,
    field_mv_per_m: float = 8.5,
    barrier_height_ev: float = 0.15,
    barrier_width_nm: float = 1.0,
    constants: MaterialConstants = SILICON,
) -> PotentialProfile:
    """Assemble the band profile for a concentration profile.

    The field term tilts the whole domain, the barrier step rises through
    the top interface, and the alloy term is the oscillating concentration
    scaled by the band shift per unit Ge. The three parts sum exactly to
    the total by construction.
    """
    if field_mv_per_m < 0.0:
        raise ConfigError(f"field must be non-negative, got {field_mv_per_m}")
    if barrier_height_ev <= 0.0 or barrier_width_nm <= 0.0:
        raise ConfigError("barrier height and width must be positive")
    z = profile.z
    field_term = -(field_mv_per_m * MV_PER_M_TO_EV_PER_NM) * z
    rel = (z - profile.interface_z) / barrier_width_nm
    barrier_term = 0.5 * barrier_height_ev * (1.0 + np.tanh(rel))
    oscillation_term = constants.alloy_shift * profile.oscillatory
    return PotentialProfile(
        z=z,
        field_term=field_term,
        barrier_term=barrier_term,
        oscillation_term=oscillation_term,
        profile=profile,
        field_mv_per_m=field_mv_per_m,
        barrier_height_ev=barrier_height_ev,
        barrier_width_nm=barrier_width_nm,
    )
