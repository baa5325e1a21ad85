"""Material and device physics: film gaps, thermal stress, tunneling
suppression, and the chip-wirebond spring-mass arithmetic.

Everything here is a pure function of its (immutable) inputs, so the module
is safe for unrestricted parallel use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .constants import H_UEV_PER_GHZ, SI_FRAC_CONTRACTION


class JunctionOrientation(Enum):
    GAP_ENGINEERED = "gap_engineered"
    NON_IDEAL_GAP_ENGINEERED = "non_ideal_gap_engineered"


class SuspensionMode(Enum):
    SIDE_TO_SIDE = "side_to_side"
    IN_AND_OUT = "in_and_out"


@dataclass(frozen=True)
class Material:
    """Thin-film material parameters.

    youngs_modulus_gpa: Young's modulus at cryogenic temperature (GPa).
    frac_contraction: fractional length change 293 K -> 4 K (dL/L).
    gap_bulk_uev: bulk superconducting gap (ueV).
    gap_thickness_coeff_uev_nm: inverse-thickness gap coefficient (ueV*nm).
    """

    name: str
    youngs_modulus_gpa: float
    frac_contraction: float
    gap_bulk_uev: float
    gap_thickness_coeff_uev_nm: float = 0.0

    def __post_init__(self) -> None:
        if self.youngs_modulus_gpa <= 0:
            raise ValueError("youngs_modulus_gpa must be > 0")
        if self.frac_contraction < 0:
            raise ValueError("frac_contraction must be >= 0")
        if self.gap_bulk_uev <= 0:
            raise ValueError("gap_bulk_uev must be > 0")
        if self.gap_thickness_coeff_uev_nm < 0:
            raise ValueError("gap_thickness_coeff_uev_nm must be >= 0")


# Default film materials: contractions from the standard cryogenic tables,
# ~100 GPa moduli for both films; Al gap law 180 ueV + 600 ueV*nm / d.
ALUMINUM = Material("Al", youngs_modulus_gpa=100.0, frac_contraction=41.5e-4,
                    gap_bulk_uev=180.0, gap_thickness_coeff_uev_nm=600.0)
NIOBIUM = Material("Nb", youngs_modulus_gpa=100.0, frac_contraction=14.3e-4,
                   gap_bulk_uev=1525.0)

MATERIALS = {m.name: m for m in (ALUMINUM, NIOBIUM)}


@dataclass(frozen=True)
class JunctionBilayer:
    """Dolan-bridge junction film stack (thicknesses in nm)."""

    thin_film_nm: float
    thick_film_nm: float
    orientation: JunctionOrientation

    def __post_init__(self) -> None:
        if self.thin_film_nm <= 0 or self.thick_film_nm <= 0:
            raise ValueError("film thicknesses must be > 0")
        if self.thin_film_nm >= self.thick_film_nm:
            raise ValueError("thin film must be thinner than thick film")


@dataclass(frozen=True)
class QubitSpec:
    """Per-qubit physical parameters.

    mapping_fidelity: parity mapping fidelity F in (0, 1].
    charge_dispersion_mhz: parity-branch frequency splitting (MHz).
    position_mm: (x, y) on the chip, mm.
    f01_rad_s: 0-1 transition angular frequency (rad/s).
    """

    id: str
    island_gap_uev: float
    ground_plane_gap_uev: float
    junction: JunctionBilayer
    mapping_fidelity: float
    charge_dispersion_mhz: float
    position_mm: tuple[float, float]
    f01_rad_s: float

    def __post_init__(self) -> None:
        if not (0 < self.mapping_fidelity <= 1):
            raise ValueError("mapping_fidelity must be in (0, 1]")
        if self.charge_dispersion_mhz <= 0:
            raise ValueError("charge_dispersion_mhz must be > 0")


@dataclass(frozen=True)
class SuspensionModel:
    """Chip suspended by wirebonds: mass in grams, per-bond stiffnesses in N/m."""

    chip_mass_g: float
    bonds_per_side: int
    k_x: float
    k_y: float
    k_z: float

    def __post_init__(self) -> None:
        for name in ("chip_mass_g", "bonds_per_side", "k_x", "k_y", "k_z"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")


def gap_from_thickness(m: Material, d_nm: float) -> float:
    """Film superconducting gap in ueV for thickness d_nm (gap grows as 1/d)."""
    if d_nm <= 0:
        raise ValueError("film thickness must be > 0")
    return m.gap_bulk_uev + m.gap_thickness_coeff_uev_nm / d_nm


def gap_difference_frequency(gap1_uev: float, gap2_uev: float) -> float:
    """|gap1 - gap2| expressed as a frequency in GHz."""
    return abs(gap1_uev - gap2_uev) / H_UEV_PER_GHZ


def thermal_stress(m: Material, subtract_substrate: bool = False) -> float:
    """Thermal stress sigma = E * dL/L in MPa for a film cooled 293 K -> 4 K.

    By default uses the film's own contraction; subtract_substrate removes
    the Si substrate contraction so only the differential part remains.
    """
    contraction = m.frac_contraction
    if subtract_substrate:
        contraction = max(contraction - SI_FRAC_CONTRACTION, 0.0)
    return m.youngs_modulus_gpa * 1e3 * contraction


def tunneling_suppression(delta_gap_uev: float, delta_e_uev: float) -> float:
    """Arrhenius suppression factor exp(-dGap/dE) for QP tunneling."""
    if delta_e_uev <= 0:
        raise ValueError("delta_e_uev must be > 0")
    return math.exp(-delta_gap_uev / delta_e_uev)


def junction_film_gaps(m: Material, junction: JunctionBilayer) -> tuple[float, float]:
    """(thin-film, thick-film) gaps of the junction bilayer in ueV."""
    return (gap_from_thickness(m, junction.thin_film_nm),
            gap_from_thickness(m, junction.thick_film_nm))


def _total_stiffness(s: SuspensionModel, mode: SuspensionMode) -> float:
    # Side-to-side motion loads only the two sides parallel to it (bonds on
    # the perpendicular edges are ignored); in-and-out loads all four sides.
    if mode is SuspensionMode.SIDE_TO_SIDE:
        return 2 * s.bonds_per_side * s.k_y
    return 4 * s.bonds_per_side * s.k_z


def suspension_mode_frequency(s: SuspensionModel, mode: SuspensionMode) -> float:
    """Resonant frequency of the chip-wirebond mode, in kHz."""
    k_total = _total_stiffness(s, mode)
    mass_kg = s.chip_mass_g * 1e-3
    return math.sqrt(k_total / mass_kg) / (2 * math.pi) / 1e3


def suspension_elastic_energy(s: SuspensionModel, displacement_nm: float,
                              mode: SuspensionMode) -> float:
    """Elastic energy (J) stored at a given chip displacement in nm."""
    if displacement_nm < 0:
        raise ValueError("displacement must be >= 0")
    k_total = _total_stiffness(s, mode)
    x = displacement_nm * 1e-9
    return 0.5 * k_total * x * x
