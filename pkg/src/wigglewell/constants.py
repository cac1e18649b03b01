"""Material constants for silicon conduction-band valleys, in nm / eV units.

All lengths are nanometers, all energies electron-volts, all wavevectors
inverse nanometers. Temperatures are kelvin where they appear.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

# hbar^2 / (2 m0) in eV nm^2
HBAR2_OVER_2M0 = 0.0380998

# Boltzmann constant in eV / K
BOLTZMANN_EV_PER_K = 8.617333e-5

# electric field unit conversion: 1 MV/m = 1e-3 eV/nm per elementary charge
MV_PER_M_TO_EV_PER_NM = 1e-3


@dataclass(frozen=True)
class MaterialConstants:
    """Bulk parameters of the host crystal.

    ``valley_position`` is the distance of the conduction-band minimum from
    the zone center along the growth axis, in units of 2*pi/a.
    ``alloy_shift`` is the conduction-band edge shift per unit Ge fraction;
    negative means Ge lowers the band edge inside the well.
    """

    lattice_constant: float = 0.543
    valley_position: float = 0.84
    mass_longitudinal: float = 0.92
    mass_transverse: float = 0.19
    alloy_shift: float = -1.53
    hbar2_over_2m0: float = HBAR2_OVER_2M0

    @property
    def reciprocal_unit(self) -> float:
        """2*pi/a in 1/nm."""
        return 2.0 * math.pi / self.lattice_constant

    @property
    def valley_wavevector(self) -> float:
        """Valley minimum position k0 along the growth axis, 1/nm."""
        return self.valley_position * self.reciprocal_unit

    @property
    def umklapp_unit(self) -> float:
        """Reciprocal-lattice step 4*pi/a along the growth axis, 1/nm."""
        return 2.0 * self.reciprocal_unit

    @property
    def monolayer(self) -> float:
        """Monolayer thickness a/4 along [001], nm."""
        return self.lattice_constant / 4.0

    @property
    def site_spacing(self) -> float:
        """In-plane spacing of the square site grid per monolayer, a/sqrt(2) nm.

        One atom per cell of this grid reproduces the diamond areal density
        of 2 atoms per a^2 per monolayer.
        """
        return self.lattice_constant / math.sqrt(2.0)

    def with_alloy_shift(self, value: float) -> "MaterialConstants":
        return replace(self, alloy_shift=value)


SILICON = MaterialConstants()
