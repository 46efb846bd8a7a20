"""Conversion between SI quantities and the chain's dimensionless units.

The Hamiltonian is written with the lattice period equal to 2π and ion mass and
charge equal to one. In SI this fixes

    length   r_a    = ℓ / 2π
    energy   ε_a    = q² / (4π ε₀ r_a)
    field    E_adc  = ε_a / (q r_a)
    velocity v_a    = sqrt(ε_a / m)
    time     t_a    = r_a / v_a

The dimensionless Planck constant is the ratio of ħ to the action scale
r_a·sqrt(m ε_a). In Gaussian units ε_a = e²/r_a, and this reduces to the
shorthand ħ / (e sqrt(m ℓ/2π)).
"""

import math
from dataclasses import dataclass
from typing import Any

from scipy import constants

from src.errors import DomainError
from src.maps import density_for_kc

COULOMB_CONSTANT = 1.0 / (4.0 * math.pi * constants.epsilon_0)


@dataclass(frozen=True)
class PhysicalInputs:
    """Lattice period, ion mass and ion charge in SI."""

    lattice_period: float
    ion_mass: float
    ion_charge: float = constants.e

    def __post_init__(self) -> None:
        for name in ("lattice_period", "ion_mass", "ion_charge"):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                raise DomainError(f"{name} must be positive, got {value!r}")

    @classmethod
    def from_amu(
        cls, lattice_period: float, mass_amu: float, charge_e: float = 1.0
    ) -> "PhysicalInputs":
        return cls(
            lattice_period=lattice_period,
            ion_mass=mass_amu * constants.atomic_mass,
            ion_charge=charge_e * constants.e,
        )


@dataclass(frozen=True)
class UnitScales:
    """Derived unit system for one physical setup."""

    r_a: float
    eps_a: float
    e_adc: float
    v_a: float
    t_a: float
    hbar_eff: float

    @property
    def eps_a_ev(self) -> float:
        return self.eps_a / constants.eV

    @property
    def eps_a_kelvin(self) -> float:
        return self.eps_a / constants.k

    def to_dict(self) -> dict[str, Any]:
        return {
            "r_a_m": self.r_a,
            "eps_a_J": self.eps_a,
            "eps_a_eV": self.eps_a_ev,
            "eps_a_K": self.eps_a_kelvin,
            "E_adc_Vm": self.e_adc,
            "v_a_ms": self.v_a,
            "t_a_s": self.t_a,
            "hbar_eff": self.hbar_eff,
        }


@dataclass(frozen=True)
class PhononScale:
    """A dimensionless frequency expressed in laboratory units."""

    angular_frequency: float
    frequency_hz: float
    temperature_kelvin: float


def derive_scales(inputs: PhysicalInputs) -> UnitScales:
    """Compute the unit system for a lattice period, ion mass and charge."""
    r_a = inputs.lattice_period / (2.0 * math.pi)
    eps_a = COULOMB_CONSTANT * inputs.ion_charge**2 / r_a
    v_a = math.sqrt(eps_a / inputs.ion_mass)
    return UnitScales(
        r_a=r_a,
        eps_a=eps_a,
        e_adc=eps_a / (inputs.ion_charge * r_a),
        v_a=v_a,
        t_a=r_a / v_a,
        hbar_eff=constants.hbar / (r_a * math.sqrt(inputs.ion_mass * eps_a)),
    )


def pinning_depth_kelvin(scales: UnitScales, kc: float) -> float:
    """Lattice depth K_c·ε_a/k_B at which the chain pins."""
    if not kc > 0:
        raise DomainError(f"critical amplitude must be positive, got {kc!r}")
    return kc * scales.eps_a_kelvin


def energy_to_si(scales: UnitScales, energy: float) -> float:
    return energy * scales.eps_a


def energy_from_si(scales: UnitScales, joules: float) -> float:
    return joules / scales.eps_a


def gap_to_physical(scales: UnitScales, omega0: float) -> PhononScale:
    """Express a dimensionless phonon frequency in rad/s, Hz and ħω/k_B."""
    if not omega0 >= 0:
        raise DomainError(f"frequency must be non-negative, got {omega0!r}")
    angular = omega0 / scales.t_a
    return PhononScale(
        angular_frequency=angular,
        frequency_hz=angular / (2.0 * math.pi),
        temperature_kelvin=constants.hbar * angular / constants.k,
    )


def critical_density_for_depth(scales: UnitScales, depth_kelvin: float) -> float:
    """Largest ion density per period that a lattice of the given depth still pins."""
    if not depth_kelvin > 0:
        raise DomainError(f"lattice depth must be positive, got {depth_kelvin!r}")
    return density_for_kc(depth_kelvin / scales.eps_a_kelvin)
