"""Averaged periodogram and the telegraph-Lorentzian fit.

Normalization convention: the spectrum of white noise of variance v is flat
at v * dt, so a +-1 digital signal with mapping fidelity F shows a noise
floor of (1 - F^2) * dt and a random-telegraph component
4 F^2 G / ((2 G)^2 + (2 pi f)^2).  The model value at f = 0 is therefore
F^2 / G + (1 - F^2) * dt exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from ..fitting import FitResult, covariance_from_jacobian


@dataclass
class PsdEstimate:
    freqs_hz: np.ndarray
    power: np.ndarray
    n_segments: int
    dt_s: float


def estimate_psd(digital, dt_s: float, segment_len: int,
                 mask=None) -> PsdEstimate:
    """Segment-averaged periodogram of a digital (+-1) signal.

    Non-overlapping segments of segment_len (a power of two) are averaged;
    segments containing any invalid sample (mask False, or sample 0 from a
    digitizer gap) are skipped.
    """
    x = np.asarray(digital, dtype=float)
    if segment_len < 2 or segment_len & (segment_len - 1):
        raise ValueError("segment_len must be a power of two >= 2")
    if len(x) < segment_len:
        raise ValueError("trace shorter than one segment")
    if mask is None:
        valid = x != 0
    else:
        valid = np.asarray(mask, dtype=bool) & (x != 0)

    n_seg_total = len(x) // segment_len
    acc = np.zeros(segment_len // 2 + 1)
    used = 0
    for k in range(n_seg_total):
        sl = slice(k * segment_len, (k + 1) * segment_len)
        if not valid[sl].all():
            continue
        spec = np.fft.rfft(x[sl])
        acc += (np.abs(spec) ** 2) * (dt_s / segment_len)
        used += 1
    if used == 0:
        raise ValueError("no fully-valid segment available")
    freqs = np.fft.rfftfreq(segment_len, dt_s)
    return PsdEstimate(freqs, acc / used, used, dt_s)


def lorentzian_psd(f_hz, gamma_p: float, fidelity: float, dt_s: float):
    """Model spectrum of a sampled +-1 telegraph with mapping fidelity F."""
    f = np.asarray(f_hz, dtype=float)
    lor = 4.0 * fidelity**2 * gamma_p / ((2.0 * gamma_p) ** 2 + (2.0 * np.pi * f) ** 2)
    return lor + (1.0 - fidelity**2) * dt_s


def fit_lorentzian(psd: PsdEstimate, dt_s: float | None = None) -> FitResult:
    """Weighted least squares of the telegraph model on log power.

    Log residuals make the multiplicative periodogram noise homoskedastic.
    The DC bin is excluded (finite-record mean leakage).  Returns gamma_p
    (1/s) and fidelity in (0, 1]; a rate pinned at the search bounds or a
    failed optimizer is flagged.
    """
    if dt_s is None:
        dt_s = psd.dt_s
    sel = psd.freqs_hz > 0
    f = psd.freqs_hz[sel]
    p = psd.power[sel]
    if len(f) < 16:
        raise ValueError("need at least 16 nonzero-frequency bins")
    if np.any(p <= 0):
        raise ValueError("power must be positive away from DC")

    floor0 = float(np.median(p[len(p) * 2 // 3:]))
    fid0 = math.sqrt(min(max(1.0 - floor0 / dt_s, 1e-4), 1.0 - 1e-9))
    s_low = float(np.mean(p[:4]))
    gamma0 = fid0**2 / max(s_low - floor0, 1e-3 * s_low)
    lo, hi = f[0] / 100.0, f[-1] * 100.0
    gamma0 = min(max(gamma0, lo * 2), hi / 2)

    def residuals(theta):
        g, fid = math.exp(theta[0]), theta[1]
        return np.log(lorentzian_psd(f, g, fid, dt_s)) - np.log(p)

    sol = least_squares(residuals, x0=[math.log(gamma0), fid0],
                        bounds=([math.log(lo), 1e-6], [math.log(hi), 1.0]))
    gamma = math.exp(sol.x[0])
    fid = float(sol.x[1])
    flags = []
    if not sol.success:
        flags.append("not_converged")
    if gamma < lo * 1.01 or gamma > hi * 0.99:
        flags.append("at_bound")
    cov = covariance_from_jacobian(sol.jac, sol.fun)
    sig = np.sqrt(np.clip(np.diag(cov), 0, None))
    return FitResult(
        {"gamma_p_per_s": gamma, "fidelity": fid},
        {"gamma_p_per_s": gamma * float(sig[0]), "fidelity": float(sig[1])},
        float(np.linalg.norm(sol.fun)), sol.success and "at_bound" not in flags,
        flags, len(f))
