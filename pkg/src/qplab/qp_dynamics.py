"""Normalized quasiparticle-density dynamics and the injection-experiment fit.

The density obeys  dx/dt = -r x^2 - s x + g(t)  with recombination rate r,
trapping rate s, and a square generation pulse g.  Conversions between x_qp
and the excess qubit relaxation rate use
x_qp = pi * dGamma1 / sqrt(2 * Delta * omega01 / hbar).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
from scipy.optimize import least_squares

from .constants import HBAR_J_S, UEV_J
from .fitting import FitResult, covariance_from_jacobian

if TYPE_CHECKING:  # pragma: no cover
    from .traces import InjectionRecord

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a hard dep, fallback for safety
    def njit(*args, **kwargs):
        def wrap(fn):
            return fn
        return wrap if not (args and callable(args[0])) else args[0]


class IntegratorError(RuntimeError):
    """Step-size control failed to keep the density non-negative."""


@dataclass(frozen=True)
class QpModelParams:
    """Rates in 1/s; the generation pulse is a 1-ms square by default."""

    r_per_s: float = 1e8          # recombination, 1/(10 ns)
    s_per_s: float = 0.0          # trapping
    g_amp_per_s: float = 0.0      # generation amplitude during the pulse
    pulse_start_s: float = 0.0
    pulse_duration_s: float = 1e-3

    def __post_init__(self) -> None:
        if self.r_per_s < 0 or self.s_per_s < 0 or self.g_amp_per_s < 0:
            raise ValueError("rates must be >= 0")
        if self.pulse_duration_s <= 0:
            raise ValueError("pulse_duration_s must be > 0")

    @property
    def pulse_end_s(self) -> float:
        return self.pulse_start_s + self.pulse_duration_s


@dataclass
class XqpTrajectory:
    times_s: np.ndarray
    x_qp: np.ndarray

    def at(self, t_s) -> np.ndarray:
        t = np.asarray(t_s, dtype=float)
        if np.any(t < self.times_s[0] - 1e-15) or np.any(t > self.times_s[-1] + 1e-15):
            raise ValueError("requested time outside trajectory")
        return np.interp(t, self.times_s, self.x_qp)


@njit(cache=True)
def _rk4_const_g(x0, r, s, g, dt, n_steps):
    """RK4 with constant g; halves any step whose stages go negative."""
    out = np.empty(n_steps + 1)
    out[0] = x0
    x = x0
    for i in range(n_steps):
        m = 1
        ok = False
        while m <= 1 << 16:
            h = dt / m
            y = x
            ok = True
            for _ in range(m):
                k1 = -r * y * y - s * y + g
                y2 = y + 0.5 * h * k1
                k2 = -r * y2 * y2 - s * y2 + g
                y3 = y + 0.5 * h * k2
                k3 = -r * y3 * y3 - s * y3 + g
                y4 = y + h * k3
                k4 = -r * y4 * y4 - s * y4 + g
                if y2 < 0 or y3 < 0 or y4 < 0:
                    ok = False
                    break
                y_new = y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
                if y_new < 0 or not math.isfinite(y_new):
                    ok = False
                    break
                y = y_new
            if ok:
                x = y
                break
            m *= 2
        if not ok:
            out[i + 1] = -1.0
            return out[: i + 2]
        out[i + 1] = x
    return out


def integrate_xqp(p: QpModelParams, x0: float, t_span: tuple[float, float],
                  dt: float) -> XqpTrajectory:
    """Integrate the density ODE on [t0, t1] with nominal step dt.

    The grid is split at the pulse edges so the discontinuity of g never
    falls inside an RK4 step; steps that would drive x negative are refined
    and, failing that, raise IntegratorError.
    """
    if x0 < 0:
        raise ValueError("x0 must be >= 0")
    if dt <= 0:
        raise ValueError("dt must be > 0")
    t0, t1 = t_span
    if t1 <= t0:
        raise ValueError("t_span must be increasing")

    breaks = sorted({t0, t1} | {t for t in (p.pulse_start_s, p.pulse_end_s)
                                if t0 < t < t1})
    times = [np.array([t0])]
    values = [np.array([x0])]
    x = x0
    for a, b in zip(breaks, breaks[1:]):
        g = p.g_amp_per_s if (a >= p.pulse_start_s - 1e-15
                              and a < p.pulse_end_s - 1e-15) else 0.0
        n_steps = max(int(math.ceil((b - a) / dt)), 1)
        h = (b - a) / n_steps
        piece = _rk4_const_g(x, p.r_per_s, p.s_per_s, g, h, n_steps)
        if piece[-1] < 0:
            raise IntegratorError(
                f"positivity guard failed near t={a + (len(piece) - 1) * h:g} s")
        times.append(a + h * np.arange(1, n_steps + 1))
        values.append(piece[1:])
        x = float(piece[-1])
    return XqpTrajectory(np.concatenate(times), np.concatenate(values))


def steady_state_xqp(r: float, s: float, g: float) -> float:
    """Positive root of r x^2 + s x = g (closed form)."""
    if g == 0:
        return 0.0
    if r == 0:
        return g / s
    return (-s + math.sqrt(s * s + 4 * r * g)) / (2 * r)


def _gamma_scale(delta_uev: float, omega01_rad_s: float) -> float:
    if delta_uev <= 0 or omega01_rad_s <= 0:
        raise ValueError("gap and omega01 must be > 0")
    delta_rad_s = delta_uev * UEV_J / HBAR_J_S
    return math.sqrt(2.0 * delta_rad_s * omega01_rad_s)


def xqp_from_gamma(dgamma1_per_s: float, delta_uev: float,
                   omega01_rad_s: float) -> float:
    """Normalized QP density from an excess relaxation rate (1/s)."""
    return math.pi * dgamma1_per_s / _gamma_scale(delta_uev, omega01_rad_s)


def gamma_from_xqp(x_qp, delta_uev: float, omega01_rad_s: float):
    """Excess relaxation rate (1/s) from a normalized QP density."""
    return x_qp * _gamma_scale(delta_uev, omega01_rad_s) / math.pi


def fit_injection(rec: "InjectionRecord", delta_uev: float,
                  omega01_rad_s: float, r_per_s: float = 1e8,
                  pulse_duration_s: float = 1e-3,
                  dt_s: float = 2e-5) -> FitResult:
    """Fit trapping rate and generation amplitude to an injection record.

    Forward model: integrate the density ODE from x=0 through the square
    pulse, convert to dGamma1, and evaluate at the recorded delays (delay 0
    = pulse end; negative delays sample during the pulse).  r stays fixed.
    """
    delays = np.asarray(rec.delays_s, dtype=float)
    y = np.asarray(rec.delta_gamma1_per_s, dtype=float)
    if len(delays) < 5:
        raise ValueError("need at least 5 delay points")
    if np.min(delays) < -pulse_duration_s:
        raise ValueError("delay before pulse start")

    t_max = pulse_duration_s + max(float(np.max(delays)), 0.0) + dt_s

    def model(theta):
        s, g = theta
        p = QpModelParams(r_per_s=r_per_s, s_per_s=s, g_amp_per_s=g,
                          pulse_start_s=0.0, pulse_duration_s=pulse_duration_s)
        traj = integrate_xqp(p, 0.0, (0.0, t_max), dt_s)
        x = traj.at(pulse_duration_s + delays)
        return gamma_from_xqp(x, delta_uev, omega01_rad_s)

    scale = _gamma_scale(delta_uev, omega01_rad_s)
    y_peak = float(np.max(y))
    flags: list[str] = []
    if y_peak <= 0 or y_peak < 10 * np.finfo(float).tiny:
        return FitResult({"s_per_s": 0.0, "g_amp_per_s": 0.0},
                         {"s_per_s": float("inf"), "g_amp_per_s": float("inf")},
                         float(np.linalg.norm(y)), False,
                         ["unidentifiable"], len(y))

    # Initial trapping rate from the post-pulse log slope, generation from
    # the peak height of the (near-linear) pulse response.
    post = delays > 0
    s0 = 1e3
    if np.count_nonzero(post & (y > 0)) >= 2:
        td, yd = delays[post & (y > 0)], y[post & (y > 0)]
        slope = np.polyfit(td, np.log(yd), 1)[0]
        if slope < 0:
            s0 = -slope
    x_peak = xqp_from_gamma(y_peak, delta_uev, omega01_rad_s)
    g0 = x_peak * s0 / max(1.0 - math.exp(-s0 * pulse_duration_s), 1e-9)

    def residuals(theta):
        return model(theta) - y

    sol = least_squares(residuals, x0=[s0, g0], bounds=([0, 0], [np.inf, np.inf]),
                        x_scale=[max(s0, 1.0), max(g0, 1e-12 * scale)])
    if not sol.success:
        flags.append("not_converged")
    cov = covariance_from_jacobian(sol.jac, sol.fun)
    sig = np.sqrt(np.clip(np.diag(cov), 0, None))
    s_hat, g_hat = sol.x
    if s_hat > 0 and sig[0] / s_hat > 10:
        flags.append("unidentifiable")
    return FitResult({"s_per_s": float(s_hat), "g_amp_per_s": float(g_hat)},
                     {"s_per_s": float(sig[0]), "g_amp_per_s": float(sig[1])},
                     float(np.linalg.norm(sol.fun)), sol.success, flags, len(y))
