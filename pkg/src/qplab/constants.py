"""Physical constants and unit helpers used across the package.

Energies are carried in micro-eV, lengths in nm/mm, rates in 1/s unless a
function says otherwise.  Cooldown timestamps are seconds since t0 (mixing
chamber below 100 mK); power-law amplitudes are quoted at t = 1 day.
"""

from __future__ import annotations

# Planck constant in ueV/GHz (E = h * f)
H_UEV_PER_GHZ = 4.135667696

# hbar in J*s and the electron volt in J
HBAR_J_S = 1.054571817e-34
EV_J = 1.602176634e-19
UEV_J = EV_J * 1e-6

SECONDS_PER_DAY = 86400.0

# Fractional thermal contraction 293 K -> 4 K for the device substrate;
# film values live in the default material table (device_model).
SI_FRAC_CONTRACTION = 2.2e-4

# Documented QP diffusion length scales (from the literature, not computed
# here): ~200 um for QPs at 1.28*gap in Al; ~4 mm (~1 mm) for QPs of energy
# 188 ueV (195 ueV) diffusing in a 183-ueV film.
QP_DIFFUSION_LENGTHS_MM = {
    "al_1p28_gap": 0.2,
    "al_188uev_in_183uev_film": 4.0,
    "al_195uev_in_183uev_film": 1.0,
}


def days_to_seconds(t_days: float) -> float:
    return t_days * SECONDS_PER_DAY


def seconds_to_days(t_s: float) -> float:
    return t_s / SECONDS_PER_DAY
