"""Multi-qubit coincidence statistics of parity-switch edges.

The record is partitioned into consecutive windows of N_w samples; each
window contributes the number of n-fold edge combinations (one edge per
qubit) it contains.  For independent qubits the expected coincidence rate
then equals the random background (prod r_i) * dt_w^(n-1) exactly, which is
what the reported background column assumes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass
class CoincidenceReport:
    fold: int
    observed_rate_per_s: float
    observed_rate_err: float
    background_rate_per_s: float
    background_rate_err: float
    window_s: float
    n_windows: int
    n_events: float
    per_qubit_rates: tuple[float, ...]
    predicted_saturation_per_s: float | None = None

    def to_dict(self) -> dict:
        d = {k: (float(v) if isinstance(v, (int, float)) and k != "fold" else v)
             for k, v in self.__dict__.items()}
        d["fold"] = int(self.fold)
        d["per_qubit_rates"] = [float(r) for r in self.per_qubit_rates]
        if self.predicted_saturation_per_s is not None:
            d["predicted_saturation_per_s"] = float(self.predicted_saturation_per_s)
        return d


def coincidence_window(rates_per_s) -> float:
    """Window length: 1/4 of the shortest parity lifetime among the qubits."""
    rates = np.asarray(rates_per_s, dtype=float)
    if np.any(rates <= 0):
        raise ValueError("all rates must be > 0")
    return 0.25 / float(np.max(rates))


def window_samples(window_s: float, dt_s: float) -> int:
    """Window length in samples (>= 1, rounded)."""
    n_w = int(round(window_s / dt_s))
    if n_w < 1:
        raise ValueError(
            f"window {window_s:g} s is below one sample at dt={dt_s:g} s")
    return n_w


def edge_indices(path) -> np.ndarray:
    """Sample indices of switching edges of a digital +-1 path (0 = gap).

    An edge at index k means the decoded state changed between samples k-1
    and k; pairs involving a gap sample are not edges.
    """
    p = np.asarray(path)
    ok = (p[1:] != 0) & (p[:-1] != 0)
    return np.flatnonzero((p[1:] != p[:-1]) & ok) + 1


def count_coincidences(paths, dt_s: float, n_w: int,
                       r_impact_per_s: float | None = None) -> CoincidenceReport:
    """Coincident switching rate of n aligned digital paths.

    Rates r_i entering the background column are edges/duration of each
    path, matching the HMM-rate convention.  The observed-rate uncertainty
    comes from the per-window sample variance; the background uncertainty
    propagates the Poisson errors of the r_i.
    """
    arrays = [np.asarray(p) for p in paths]
    n = len(arrays)
    if n < 2:
        raise ValueError("need at least two qubits")
    length = len(arrays[0])
    if any(len(a) != length for a in arrays):
        raise ValueError("paths must be aligned and equal length")

    n_windows = length // n_w
    if n_windows < 1:
        raise ValueError("record shorter than one window")
    span = n_windows * n_w
    duration = span * dt_s
    window_s = n_w * dt_s

    per_window = np.ones(n_windows)
    rates = []
    edge_counts = []
    for a in arrays:
        idx = edge_indices(a[:span])
        counts = np.bincount(idx // n_w, minlength=n_windows)
        per_window = per_window * counts
        edge_counts.append(len(idx))
        rates.append(len(idx) / duration)

    n_events = float(per_window.sum())
    observed = n_events / duration
    observed_err = float(np.std(per_window) * math.sqrt(n_windows)) / duration

    background = float(np.prod(rates)) * window_s ** (n - 1)
    rel = math.sqrt(sum(1.0 / max(c, 1) for c in edge_counts))
    background_err = background * rel

    saturation = None
    if r_impact_per_s is not None:
        saturation = predict_saturation(r_impact_per_s, n)
    return CoincidenceReport(n, observed, observed_err, background,
                             background_err, window_s, n_windows, n_events,
                             tuple(rates), saturation)


def predict_saturation(r_impact_per_s: float, fold: int) -> float:
    """Ionizing-radiation floor for fold-way coincidences: R_impact / 2^n."""
    if fold < 1:
        raise ValueError("fold must be >= 1")
    return r_impact_per_s / 2.0 ** fold
