"""Physical constants and unit conversion.

Everything inside the package works in natural units (hbar = m_e = c = 1,
e^2 = alpha).  Energies are converted to eV only when reports are written.
"""

from __future__ import annotations

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class PhysicalConstants:
    alpha: float = 1.0 / 137.035999084
    electron_rest_energy_eV: float = 510998.95000
    fm_per_natural_length: float = 386.15926796  # reduced Compton wavelength

    def __post_init__(self):
        if not 0.00729 < self.alpha < 0.00730:
            raise ValueError(f"alpha out of range: {self.alpha}")
        if not 510998.0 < self.electron_rest_energy_eV < 511000.0:
            raise ValueError(f"electron rest energy out of range: {self.electron_rest_energy_eV}")
        if not 386.1 < self.fm_per_natural_length < 386.2:
            raise ValueError(f"length unit out of range: {self.fm_per_natural_length}")

    def with_overrides(self, **kw) -> "PhysicalConstants":
        return replace(self, **kw)


DEFAULT = PhysicalConstants()
ALPHA = DEFAULT.alpha


def to_eV(energy_natural, constants: PhysicalConstants = DEFAULT):
    return energy_natural * constants.electron_rest_energy_eV


def from_eV(energy_eV, constants: PhysicalConstants = DEFAULT):
    return energy_eV / constants.electron_rest_energy_eV


def fm_to_natural(length_fm, constants: PhysicalConstants = DEFAULT):
    return length_fm / constants.fm_per_natural_length


def natural_to_fm(length, constants: PhysicalConstants = DEFAULT):
    return length * constants.fm_per_natural_length
