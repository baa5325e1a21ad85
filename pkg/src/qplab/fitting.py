"""Shared estimator-result container and least-squares helpers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class FitResult:
    """Generic estimator output.

    params/uncertainties: named parameter values and 1-sigma errors.
    residual_norm: sqrt(sum of squared residuals) at the solution.
    converged: optimizer termination was clean; a False value always comes
    with an explanatory flag.  Flags that indicate an unreliable result:
    'not_converged', 'at_bound', 'unidentifiable', 'low_snr'.
    """

    params: dict[str, float]
    uncertainties: dict[str, float]
    residual_norm: float
    converged: bool
    flags: list[str] = field(default_factory=list)
    n_points: int = 0

    def to_dict(self) -> dict:
        return {
            "params": {k: float(v) for k, v in self.params.items()},
            "uncertainties": {k: float(v) for k, v in self.uncertainties.items()},
            "residual_norm": float(self.residual_norm),
            "converged": bool(self.converged),
            "flags": list(self.flags),
            "n_points": int(self.n_points),
        }


def covariance_from_jacobian(jac: np.ndarray, residuals: np.ndarray) -> np.ndarray:
    """Parameter covariance (J^T J)^-1 * s^2 with s^2 the residual variance.

    Falls back to pseudo-inverse (and inf on zero dof) for rank-deficient fits.
    """
    n, p = jac.shape
    dof = max(n - p, 1)
    s2 = float(residuals @ residuals) / dof
    jtj = jac.T @ jac
    try:
        cov = np.linalg.inv(jtj)
    except np.linalg.LinAlgError:
        cov = np.linalg.pinv(jtj)
    return cov * s2
