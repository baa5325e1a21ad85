"""Charge-tomography curve fitting and offset-charge tracking.

The one-state probability versus total offset charge n_g is
P1 = (d + nu * cos(pi * cos(2 pi n_g))) / 2 with signal-axis parameters
d, nu; the environmental offset enters as n_g = n_g_ext + dn_g and is
reported in the canonical branch [0, 0.25] e.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
from scipy.optimize import least_squares

from ..fitting import FitResult, covariance_from_jacobian
from .charge import ChargeRecord, canonical_offset_charge, minimal_image_step

if TYPE_CHECKING:  # pragma: no cover
    from ..traces import TomographyScan


def p1_curve(n_g, d: float = 1.0, nu: float = 1.0):
    """Noiseless one-state probability at total offset charge n_g (in e)."""
    n = np.asarray(n_g, dtype=float)
    return 0.5 * (d + nu * np.cos(np.pi * np.cos(2.0 * np.pi * n)))


def fit_tomography(scan: "TomographyScan") -> FitResult:
    """Least-squares fit of (d, nu, dn_g) to a tomography scan.

    d and nu enter linearly, so the offset is located by a dense scan of
    the branch [0, 0.25] with an exact linear solve at each trial offset,
    then polished by a nonlinear fit.  A fitted |nu| below noise makes the
    offset unidentifiable, which is flagged.
    """
    n_ext = np.asarray(scan.n_g_ext, dtype=float)
    p1 = np.asarray(scan.p1, dtype=float)
    if len(n_ext) < 8:
        raise ValueError("need at least 8 scan points")
    if np.ptp(n_ext) < 1.0 - 1e-9:
        raise ValueError("scan must span at least one period (1 e)")

    # The model repeats when the offset shifts by half a period, so the
    # grid over [0, 0.5) covers every distinguishable offset.
    best = None
    for delta in np.linspace(0.0, 0.5, 96, endpoint=False):
        basis = np.cos(np.pi * np.cos(2.0 * np.pi * (n_ext + delta)))
        design = np.column_stack([np.full_like(n_ext, 0.5), 0.5 * basis])
        coef, *_ = np.linalg.lstsq(design, p1, rcond=None)
        sse = float(np.sum((design @ coef - p1) ** 2))
        if best is None or sse < best[0]:
            best = (sse, delta, coef)
    _, delta0, (d0, nu0) = best

    def residuals(theta):
        d, nu, delta = theta
        return p1_curve(n_ext + delta, d, nu) - p1

    sol = least_squares(residuals, x0=[d0, max(nu0, 1e-3), delta0],
                        bounds=([-np.inf, 0.0, -np.inf], [np.inf] * 3))
    d_hat, nu_hat, delta_hat = sol.x
    delta_canon = canonical_offset_charge(delta_hat)

    cov = covariance_from_jacobian(sol.jac, sol.fun)
    sig = np.sqrt(np.clip(np.diag(cov), 0, None))
    flags = []
    if not sol.success:
        flags.append("not_converged")
    if abs(nu_hat) < 3 * sig[1] or abs(nu_hat) < 1e-6:
        flags.append("unidentifiable")
    return FitResult(
        {"d": float(d_hat), "nu": float(nu_hat), "dn_g_e": float(delta_canon)},
        {"d": float(sig[0]), "nu": float(sig[1]), "dn_g_e": float(sig[2])},
        float(np.linalg.norm(sol.fun)), sol.success, flags, len(p1))


def track_offset_charge(times_s, scans, max_gap_s: float = float("inf")
                        ) -> list[ChargeRecord]:
    """Fit a scan sequence and unwrap the offsets into charge records.

    Consecutive fits are connected by the minimal-magnitude branch image;
    a time gap larger than max_gap_s splits the record (no unwrapping
    continuity across it).  Returns one record per contiguous stretch.
    """
    times = np.asarray(times_s, dtype=float)
    if len(times) != len(scans):
        raise ValueError("times/scans length mismatch")
    if len(scans) < 2:
        raise ValueError("need at least 2 scans")
    fits = [fit_tomography(s) for s in scans]
    canon = np.array([f.params["dn_g_e"] for f in fits])

    records: list[ChargeRecord] = []
    start = 0
    for i in range(1, len(times) + 1):
        if i == len(times) or times[i] - times[i - 1] > max_gap_s:
            seg_t, seg_v = times[start:i], canon[start:i]
            unwrapped = np.empty_like(seg_v)
            unwrapped[0] = seg_v[0]
            for k in range(1, len(seg_v)):
                unwrapped[k] = unwrapped[k - 1] + minimal_image_step(
                    unwrapped[k - 1], seg_v[k])
            records.append(ChargeRecord(seg_t, seg_v, unwrapped))
            start = i
    return records
