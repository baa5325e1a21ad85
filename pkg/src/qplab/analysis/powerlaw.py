"""Power-law fits of rate-versus-cooldown-time series."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from ..fitting import covariance_from_jacobian


@dataclass
class PowerLawFit:
    """rate(t) = amplitude * t^exponent (+ floor), t in days at base."""

    amplitude: float
    exponent: float
    floor: float | None
    uncertainties: dict[str, float]
    excluded: tuple[int, ...] = ()
    converged: bool = True
    flags: list[str] = field(default_factory=list)
    residual_norm: float = 0.0
    n_points: int = 0

    def evaluate(self, t_days):
        t = np.asarray(t_days, dtype=float)
        out = self.amplitude * t ** self.exponent
        if self.floor is not None:
            out = out + self.floor
        return out

    def to_dict(self) -> dict:
        return {
            "params": {"amplitude": float(self.amplitude),
                       "exponent": float(self.exponent),
                       "floor": None if self.floor is None else float(self.floor)},
            "uncertainties": {k: float(v) for k, v in self.uncertainties.items()},
            "excluded": list(map(int, self.excluded)),
            "converged": bool(self.converged),
            "flags": list(self.flags),
            "residual_norm": float(self.residual_norm),
            "n_points": int(self.n_points),
        }


def fit_powerlaw(times_days, rates_per_s, with_floor: bool = False,
                 exclude=None) -> PowerLawFit:
    """Fit A * t^alpha (optionally + floor) to a rate series.

    Without a floor the fit is ordinary least squares in log-log space.
    With a floor it is a relative-residual nonlinear fit (rates span
    decades, and their errors are roughly fractional).  `exclude` lists
    point indices left out of the fit, e.g. anomalous single-qubit
    episodes; they are recorded in the result.
    """
    t = np.asarray(times_days, dtype=float)
    y = np.asarray(rates_per_s, dtype=float)
    excluded = tuple(sorted(set(map(int, exclude)))) if exclude is not None else ()
    keep = np.ones(len(t), dtype=bool)
    for i in excluded:
        keep[i] = False
    t, y = t[keep], y[keep]
    if len(t) < 4:
        raise ValueError("need at least 4 points after exclusions")
    if np.any(t <= 0):
        raise ValueError("times must be > 0")
    if np.any(y <= 0):
        raise ValueError("rates must be > 0")

    lt, ly = np.log(t), np.log(y)
    design = np.column_stack([np.ones_like(lt), lt])
    coef, res_ss, *_ = np.linalg.lstsq(design, ly, rcond=None)
    ln_a, alpha = coef
    resid = ly - design @ coef
    cov = covariance_from_jacobian(design, resid)
    sig_lna, sig_alpha = np.sqrt(np.clip(np.diag(cov), 0, None))

    if not with_floor:
        flags = [] if alpha < 0 else ["nonnegative_exponent"]
        return PowerLawFit(math.exp(ln_a), float(alpha), None,
                           {"amplitude": math.exp(ln_a) * float(sig_lna),
                            "exponent": float(sig_alpha)},
                           excluded, True, flags,
                           float(np.linalg.norm(resid)), len(t))

    floor0 = 0.5 * float(np.min(y))

    def residuals(theta):
        ln_a_, alpha_, ln_c = theta
        model = np.exp(ln_a_) * t ** alpha_ + np.exp(ln_c)
        return (model - y) / y

    sol = least_squares(residuals, x0=[ln_a, alpha, math.log(floor0)])
    ln_a_f, alpha_f, ln_c_f = sol.x
    cov = covariance_from_jacobian(sol.jac, sol.fun)
    sig = np.sqrt(np.clip(np.diag(cov), 0, None))
    flags = []
    if not sol.success:
        flags.append("not_converged")
    if alpha_f >= 0:
        flags.append("nonnegative_exponent")
    amp, floor = math.exp(ln_a_f), math.exp(ln_c_f)
    return PowerLawFit(amp, float(alpha_f), floor,
                       {"amplitude": amp * float(sig[0]),
                        "exponent": float(sig[1]),
                        "floor": floor * float(sig[2])},
                       excluded, sol.success, flags,
                       float(np.linalg.norm(sol.fun)), len(t))
