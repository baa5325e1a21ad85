"""Two-state Gaussian-emission hidden Markov decoding of parity signals.

Parameters are learned by Baum-Welch (scaled forward-backward, shared
emission width) and the state path by Viterbi.  The reported switching
rate is (path transitions) / (valid duration), the convention used for
coincidence backgrounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover
    def njit(*args, **kwargs):
        def wrap(fn):
            return fn
        return wrap if not (args and callable(args[0])) else args[0]


class DegenerateSignalError(ValueError):
    """Signal shows a single mode; two-state decoding is meaningless."""


@dataclass
class HmmResult:
    path: np.ndarray            # int8: -1/+1 decoded parity, 0 at gaps
    rate_per_s: float
    n_transitions: int
    params: dict[str, float]
    loglik: float
    converged: bool
    flags: list[str] = field(default_factory=list)
    n_iter: int = 0


@njit(cache=True)
def _forward_backward(x, mu0, mu1, sigma, a00, a01, a10, a11, pi0, pi1, gamma1):
    n = len(x)
    inv2s2 = 1.0 / (2.0 * sigma * sigma)
    lognorm = -0.5 * math.log(2.0 * math.pi) - math.log(sigma)
    norm = math.exp(lognorm)
    e0 = np.empty(n)
    e1 = np.empty(n)
    for t in range(n):
        d0 = x[t] - mu0
        d1 = x[t] - mu1
        e0[t] = norm * math.exp(-d0 * d0 * inv2s2) + 1e-300
        e1[t] = norm * math.exp(-d1 * d1 * inv2s2) + 1e-300

    al0 = np.empty(n)
    al1 = np.empty(n)
    c = np.empty(n)
    a0 = pi0 * e0[0]
    a1 = pi1 * e1[0]
    c[0] = a0 + a1
    al0[0] = a0 / c[0]
    al1[0] = a1 / c[0]
    for t in range(1, n):
        a0 = (al0[t - 1] * a00 + al1[t - 1] * a10) * e0[t]
        a1 = (al0[t - 1] * a01 + al1[t - 1] * a11) * e1[t]
        ct = a0 + a1
        c[t] = ct
        al0[t] = a0 / ct
        al1[t] = a1 / ct

    loglik = 0.0
    for t in range(n):
        loglik += math.log(c[t])

    b0 = 1.0
    b1 = 1.0
    xi00 = 0.0
    xi01 = 0.0
    xi10 = 0.0
    xi11 = 0.0
    gamma1[n - 1] = al1[n - 1]
    for t in range(n - 2, -1, -1):
        f0 = e0[t + 1] * b0 / c[t + 1]
        f1 = e1[t + 1] * b1 / c[t + 1]
        xi00 += al0[t] * a00 * f0
        xi01 += al0[t] * a01 * f1
        xi10 += al1[t] * a10 * f0
        xi11 += al1[t] * a11 * f1
        nb0 = a00 * f0 + a01 * f1
        nb1 = a10 * f0 + a11 * f1
        b0 = nb0
        b1 = nb1
        gamma1[t] = al1[t] * b1
    return loglik, xi00, xi01, xi10, xi11


@njit(cache=True)
def _viterbi(x, mu0, mu1, sigma, a00, a01, a10, a11, pi0, pi1):
    n = len(x)
    inv2s2 = 1.0 / (2.0 * sigma * sigma)
    la00 = math.log(a00)
    la01 = math.log(a01)
    la10 = math.log(a10)
    la11 = math.log(a11)
    back = np.empty((n, 2), dtype=np.int8)
    d0 = x[0] - mu0
    d1 = x[0] - mu1
    v0 = math.log(pi0) - d0 * d0 * inv2s2
    v1 = math.log(pi1) - d1 * d1 * inv2s2
    for t in range(1, n):
        d0 = x[t] - mu0
        d1 = x[t] - mu1
        e0 = -d0 * d0 * inv2s2
        e1 = -d1 * d1 * inv2s2
        s00 = v0 + la00
        s10 = v1 + la10
        if s00 >= s10:
            nv0 = s00 + e0
            back[t, 0] = 0
        else:
            nv0 = s10 + e0
            back[t, 0] = 1
        s01 = v0 + la01
        s11 = v1 + la11
        if s01 >= s11:
            nv1 = s01 + e1
            back[t, 1] = 0
        else:
            nv1 = s11 + e1
            back[t, 1] = 1
        v0 = nv0
        v1 = nv1
    path = np.empty(n, dtype=np.int8)
    state = 0 if v0 >= v1 else 1
    path[n - 1] = state
    for t in range(n - 1, 0, -1):
        state = back[t, state]
        path[t - 1] = state
    return path


def _segments_from_mask(valid: np.ndarray) -> list[tuple[int, int]]:
    idx = np.flatnonzero(np.diff(np.concatenate(([False], valid, [False])).astype(int)))
    return [(int(a), int(b)) for a, b in zip(idx[::2], idx[1::2])]


def hmm_decode(signal, dt_s: float, init_rate_per_s: float | None = None,
               mask=None, max_iter: int = 200, tol: float = 1e-8) -> HmmResult:
    """Decode a parity signal into a +-1 path and a switching rate.

    Gaps (mask False) split the record; no transition is counted across a
    gap.  init_rate_per_s seeds the transition probabilities; by default it
    comes from a threshold pre-pass.  EM stops when the relative
    log-likelihood change falls below tol, flagging 'not_converged' at the
    iteration cap and raising DegenerateSignalError for single-mode input.
    """
    x = np.asarray(signal, dtype=float)
    valid = np.ones(len(x), dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    valid = valid & np.isfinite(x)
    segments = [(a, b) for a, b in _segments_from_mask(valid) if b - a >= 2]
    if not segments:
        raise ValueError("no usable (>= 2 sample) valid segment")

    xv = np.concatenate([x[a:b] for a, b in segments])
    thr = float(np.mean(xv))
    lo_sel = xv < thr
    if lo_sel.all() or not lo_sel.any():
        raise DegenerateSignalError("threshold pre-pass found one occupied mode")
    mu0 = float(np.mean(xv[lo_sel]))
    mu1 = float(np.mean(xv[~lo_sel]))
    sigma = float(np.sqrt((np.var(xv[lo_sel]) * lo_sel.sum()
                           + np.var(xv[~lo_sel]) * (~lo_sel).sum()) / len(xv)))
    sigma = max(sigma, 1e-6 * max(abs(mu1 - mu0), 1e-30), 1e-300)

    flags: list[str] = []
    separation = abs(mu1 - mu0) / sigma
    if separation < 0.5:
        raise DegenerateSignalError(f"mode separation {separation:.2f} sigma < 0.5")
    if separation < 2.0:
        flags.append("low_snr")

    if init_rate_per_s is None:
        edges = 0
        for a, b in segments:
            d = x[a:b] >= thr
            edges += int(np.count_nonzero(d[1:] != d[:-1]))
        duration = sum(b - a for a, b in segments) * dt_s
        init_rate_per_s = max(edges / duration, 1e-3 / duration)
    p = min(max(init_rate_per_s * dt_s, 1e-8), 0.4)
    a01 = a10 = p
    pi0 = pi1 = 0.5

    loglik_prev = -np.inf
    loglik = -np.inf
    converged = False
    gammas = [np.empty(b - a) for a, b in segments]
    it = 0
    for it in range(1, max_iter + 1):
        loglik = 0.0
        xi = np.zeros(4)
        n0 = n1 = 0.0
        s0 = s1 = 0.0
        for (a, b), g1 in zip(segments, gammas):
            ll, x00, x01, x10, x11 = _forward_backward(
                x[a:b], mu0, mu1, sigma, 1 - a01, a01, a10, 1 - a10,
                pi0, pi1, g1)
            loglik += ll
            xi += (x00, x01, x10, x11)
            n1 += g1.sum()
            n0 += (b - a) - g1.sum()
            s1 += float(g1 @ x[a:b])
            s0 += float((1 - g1) @ x[a:b])
        mu0_new = s0 / max(n0, 1e-12)
        mu1_new = s1 / max(n1, 1e-12)
        ss = 0.0
        for (a, b), g1 in zip(segments, gammas):
            seg = x[a:b]
            ss += float((1 - g1) @ (seg - mu0_new) ** 2 + g1 @ (seg - mu1_new) ** 2)
        sigma = max(math.sqrt(ss / (n0 + n1)), 1e-300)
        mu0, mu1 = mu0_new, mu1_new
        a01 = min(max(xi[1] / max(xi[0] + xi[1], 1e-300), 1e-12), 1 - 1e-12)
        a10 = min(max(xi[2] / max(xi[2] + xi[3], 1e-300), 1e-12), 1 - 1e-12)
        pi1 = min(max(n1 / (n0 + n1), 1e-12), 1 - 1e-12)
        pi0 = 1 - pi1
        if abs(loglik - loglik_prev) <= tol * (1.0 + abs(loglik)):
            converged = True
            break
        loglik_prev = loglik
    if not converged:
        flags.append("not_converged")

    path = np.zeros(len(x), dtype=np.int8)
    transitions = 0
    for a, b in segments:
        states = _viterbi(x[a:b], mu0, mu1, sigma, 1 - a01, a01, a10, 1 - a10,
                          pi0, pi1)
        transitions += int(np.count_nonzero(states[1:] != states[:-1]))
        path[a:b] = np.where(states == 1, 1, -1).astype(np.int8)
    if mu0 > mu1:  # keep +1 as the high-signal state
        path[valid] = -path[valid]
        mu0, mu1 = mu1, mu0
        a01, a10 = a10, a01

    duration = sum(b - a for a, b in segments) * dt_s
    rate = transitions / duration
    params = {"mu_minus": mu0, "mu_plus": mu1, "sigma": sigma,
              "p_up": a01, "p_down": a10}
    return HmmResult(path, rate, transitions, params, loglik, converged,
                     flags, it)
