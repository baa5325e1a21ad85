"""Offset-charge records: canonical branch, unwrapping, jump statistics.

The tomography signal depends on cos(2*pi*n_g), so a fitted environmental
offset charge is only determined up to sign flips and half-integer shifts;
the canonical representative lives in [0, 0.25] e.  Consecutive readings
are unwrapped by picking the image of each new value closest to the running
estimate, which caps a detectable single step at 0.25 e.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


def canonical_offset_charge(x) -> np.ndarray | float:
    """Fold an offset charge into the canonical branch [0, 0.25] e."""
    y = np.mod(np.asarray(x, dtype=float), 0.5)
    y = np.where(y > 0.25, 0.5 - y, y)
    return float(y) if np.isscalar(x) or y.ndim == 0 else y


def offset_images(y: float, around: float) -> np.ndarray:
    """Images {+-y + k/2} of a canonical value near a reference point."""
    k0 = math.floor((around - y) / 0.5)
    ks = np.arange(k0 - 2, k0 + 3) * 0.5
    return np.sort(np.concatenate([ks + y, ks - y]))


def minimal_image_step(previous: float, new_canonical: float) -> float:
    """Smallest-magnitude step taking `previous` to an image of the new value."""
    images = offset_images(new_canonical, previous)
    return float(images[np.argmin(np.abs(images - previous))] - previous)


def unwrap_canonical(values_canonical: np.ndarray) -> np.ndarray:
    """Minimal-jump reconstruction of an offset-charge series."""
    values = np.asarray(values_canonical, dtype=float)
    out = np.empty_like(values)
    if len(values) == 0:
        return out
    out[0] = values[0]
    for i in range(1, len(values)):
        out[i] = out[i - 1] + minimal_image_step(out[i - 1], values[i])
    return out


@dataclass
class ChargeRecord:
    """Environmental offset charge versus time.

    values_e holds the as-reported (canonical-branch) readings; unwrapped_e
    the minimal-jump accumulated series.  truth_e, when present, is the
    simulation ground truth before wrapping.
    """

    times_s: np.ndarray
    values_e: np.ndarray
    unwrapped_e: np.ndarray = field(default=None)  # type: ignore[assignment]
    truth_e: np.ndarray | None = None

    def __post_init__(self) -> None:
        self.times_s = np.asarray(self.times_s, dtype=float)
        self.values_e = np.asarray(self.values_e, dtype=float)
        if self.unwrapped_e is None:
            self.unwrapped_e = unwrap_canonical(self.values_e)
        if np.any(np.abs(self.values_e) > 0.5 + 1e-12):
            raise ValueError("reported offset charge must be wrapped to |x| <= 0.5")
        if len(self.times_s) != len(self.values_e):
            raise ValueError("times/values length mismatch")

    @property
    def duration_s(self) -> float:
        return float(self.times_s[-1] - self.times_s[0]) if len(self.times_s) > 1 else 0.0

    def steps(self) -> tuple[np.ndarray, np.ndarray]:
        """(times, magnitudes) of consecutive unwrapped differences."""
        if len(self.times_s) < 2:
            return np.empty(0), np.empty(0)
        return self.times_s[1:], np.diff(self.unwrapped_e)


def detect_jumps(record: ChargeRecord, threshold_e: float = 0.15
                 ) -> tuple[np.ndarray, np.ndarray]:
    """(times, signed magnitudes) of steps exceeding the threshold."""
    t, d = record.steps()
    sel = np.abs(d) > threshold_e
    return t[sel], d[sel]


def jump_rate(record: ChargeRecord, threshold_e: float = 0.15
              ) -> tuple[float, float]:
    """Rate of large offset-charge jumps with its Poisson uncertainty.

    Zero detected jumps returns (0, upper bound 1/duration).
    """
    duration = record.duration_s
    if duration <= 0:
        raise ValueError("record duration must be > 0")
    _, jumps = detect_jumps(record, threshold_e)
    n = len(jumps)
    rate = n / duration
    err = math.sqrt(n) / duration if n else 1.0 / duration
    return rate, err


def estimate_impact_rate(gamma_c_per_s: float, gamma_c_err: float = 0.0,
                         sensing_radius_mm: float = 1.0,
                         chip_side_mm: float = 8.0) -> tuple[float, float]:
    """Chip-wide ionizing impact rate from a per-qubit charge-jump rate.

    A qubit senses impacts within sensing_radius of its island, so the chip
    rate is gamma_c scaled by (chip area) / (pi * radius^2).
    """
    sensing_area = math.pi * sensing_radius_mm ** 2
    chip_area = chip_side_mm ** 2
    if sensing_area >= chip_area:
        raise ValueError("sensing area must be smaller than the chip")
    scale = chip_area / sensing_area
    return gamma_c_per_s * scale, gamma_c_err * scale
