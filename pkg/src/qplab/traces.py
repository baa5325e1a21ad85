"""Synthetic measurement records: parity-mapping traces, charge-tomography
scans, and injection/T1 relaxation records.

Parity mapping is modeled at the signal level: the hidden parity is an
exact continuous-time telegraph (exponential waiting times, so several
flips inside one sampling interval cancel to the parity of the flip
count), and each sample reads parity * F + Gaussian readout noise.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from .analysis.charge import ChargeRecord, canonical_offset_charge
from .analysis.tomography import p1_curve
from .device_model import QubitSpec
from .events import EventStream
from .qp_dynamics import XqpTrajectory, gamma_from_xqp
from .rng import derive_rng

# Degeneracy cut: accepted samples must satisfy |cos(2 pi n_g)| >= threshold.
DEFAULT_DEGENERACY_MAX_ERROR = 0.157


def degeneracy_cos_threshold(max_error: float = DEFAULT_DEGENERACY_MAX_ERROR) -> float:
    """|cos(2 pi n_g)| cut equivalent to a state-detection error ceiling.

    The parity contrast scales as sin(pi/2 * |cos(2 pi n_g)|); an ideal
    mapping then misassigns with probability (1 - contrast) / 2, which is
    inverted here to a cut on |cos|.
    """
    if not (0 < max_error < 0.5):
        raise ValueError("max_error must be in (0, 0.5)")
    return 2.0 / math.pi * math.asin(1.0 - 2.0 * max_error)


@dataclass
class ParityTrace:
    """Sampled parity-mapping signal plus simulation ground truth.

    samples: analog readout (arb. units); hidden: true parity +-1;
    mask: sample validity (offset-charge degeneracy cut).
    """

    qubit_id: str
    dt_s: float
    samples: np.ndarray
    hidden: np.ndarray
    mask: np.ndarray
    t_start_s: float = 0.0

    def __post_init__(self) -> None:
        if self.dt_s <= 0:
            raise ValueError("dt_s must be > 0")
        if not (len(self.samples) == len(self.hidden) == len(self.mask)):
            raise ValueError("samples/hidden/mask length mismatch")

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def times_s(self) -> np.ndarray:
        return self.t_start_s + self.dt_s * np.arange(len(self.samples))


@dataclass
class TomographyScan:
    """One offset-charge sweep: P1 estimates on an external-gate grid."""

    qubit_id: str
    n_g_ext: np.ndarray
    p1: np.ndarray
    shots: int
    truth: tuple[float, float, float] | None = None  # (d, nu, dn_g)

    def __post_init__(self) -> None:
        if self.shots <= 0:
            raise ValueError("shots must be > 0")
        if np.any((np.asarray(self.p1) < 0) | (np.asarray(self.p1) > 1)):
            raise ValueError("P1 estimates must sit in [0, 1]")


@dataclass
class InjectionRecord:
    """Excess relaxation rate versus injection-pulse delay.

    Delay 0 is the pulse end; negative delays sample during the pulse
    (the pulse is ended at the start of the T1 sequence).
    """

    qubit_id: str
    delays_s: np.ndarray
    delta_gamma1_per_s: np.ndarray
    baseline_t1_s: float
    injector_position_mm: tuple[float, float]

    def __post_init__(self) -> None:
        if self.baseline_t1_s <= 0:
            raise ValueError("baseline_t1_s must be > 0")


def _background_flip_times(background, t0: float, t1: float,
                           rng: np.random.Generator) -> np.ndarray:
    """Sample flip times on [t0, t1) for a constant or callable rate."""
    if background is None:
        return np.empty(0)
    if callable(background):
        grid = np.linspace(t0, t1, 257)
        lam = np.asarray([background(t) for t in grid], dtype=float)
        if np.any(lam < 0):
            raise ValueError("background rate must be >= 0")
        lam_max = float(lam.max()) * 1.05
        if lam_max <= 0:
            return np.empty(0)
        n = rng.poisson(lam_max * (t1 - t0))
        cand = np.sort(rng.uniform(t0, t1, n))
        keep = rng.random(n) * lam_max < np.interp(cand, grid, lam)
        return cand[keep]
    rate = float(background)
    if rate < 0:
        raise ValueError("background rate must be >= 0")
    if rate == 0:
        return np.empty(0)
    n = rng.poisson(rate * (t1 - t0))
    return np.sort(rng.uniform(t0, t1, n))


def synth_parity_trace(qubit: QubitSpec, events: EventStream | None,
                       background, dt_s: float, n_samples: int,
                       noise_sd: float, seed, t_start_s: float = 0.0,
                       n_g=None,
                       degeneracy_max_error: float = DEFAULT_DEGENERACY_MAX_ERROR
                       ) -> ParityTrace:
    """Synthesize one parity-mapping record.

    The hidden parity flips at the background rate (constant or callable
    lambda(t), 1/s) plus at every event in the stream that flipped this
    qubit.  n_g, when given (scalar or per-sample array), marks samples
    near the charge degeneracy as invalid.
    """
    if n_samples <= 0:
        raise ValueError("n_samples must be > 0")
    rng = derive_rng(seed, f"parity:{qubit.id}")
    t_end = t_start_s + n_samples * dt_s

    flips = [_background_flip_times(background, t_start_s, t_end, rng)]
    if events is not None:
        ev = events.qubit_flip_times(qubit.id)
        flips.append(ev[(ev >= t_start_s) & (ev < t_end)])
    flip_times = np.sort(np.concatenate(flips))

    t = t_start_s + dt_s * np.arange(n_samples)
    n_before = np.searchsorted(flip_times, t, side="right")
    start = 1 if rng.random() < 0.5 else -1
    hidden = (start * np.where(n_before % 2 == 0, 1, -1)).astype(np.int8)

    samples = hidden * qubit.mapping_fidelity
    if noise_sd > 0:
        samples = samples + rng.normal(0.0, noise_sd, n_samples)
    samples = samples.astype(float)

    if n_g is None:
        mask = np.ones(n_samples, dtype=bool)
    else:
        thr = degeneracy_cos_threshold(degeneracy_max_error)
        ng_arr = np.broadcast_to(np.asarray(n_g, dtype=float), (n_samples,))
        mask = np.abs(np.cos(2.0 * np.pi * ng_arr)) >= thr
    return ParityTrace(qubit.id, dt_s, samples, hidden, mask, t_start_s)


def synth_charge_record(events: EventStream, qubit_id: str,
                        drift_sd_e_sqrt_s: float, horizon_s: float,
                        dt_s: float, seed, delta0_e: float = 0.1,
                        t_start_s: float = 0.0) -> ChargeRecord:
    """Environmental offset charge sampled every dt_s over a horizon.

    The truth is a Wiener drift plus the discrete jumps this qubit sees in
    the event stream; reported values are wrapped to the canonical branch
    exactly as the tomography fits would report them.
    """
    if horizon_s <= 0 or dt_s <= 0:
        raise ValueError("horizon and dt must be > 0")
    rng = derive_rng(seed, f"charge:{qubit_id}")
    n = int(round(horizon_s / dt_s)) + 1
    t = t_start_s + dt_s * np.arange(n)
    steps = rng.normal(0.0, drift_sd_e_sqrt_s * math.sqrt(dt_s), n - 1)
    truth = delta0_e + np.concatenate([[0.0], np.cumsum(steps)])
    jump_t, jump_m = events.qubit_jumps(qubit_id)
    sel = (jump_t >= t[0]) & (jump_t < t[-1])
    impulses = np.zeros(n)
    np.add.at(impulses, np.searchsorted(t, jump_t[sel], side="left"), jump_m[sel])
    truth = truth + np.cumsum(impulses)
    values = canonical_offset_charge(truth)
    return ChargeRecord(t, values, truth_e=truth)


def synth_tomography_scan(qubit: QubitSpec, truth: tuple[float, float, float],
                          n_g_ext, shots: int, seed) -> TomographyScan:
    """Binomial-sampled tomography sweep for ground truth (d, nu, dn_g)."""
    d, nu, dn_g = truth
    if nu == 0:
        raise ValueError("nu must be nonzero for an identifiable offset")
    if shots <= 0:
        raise ValueError("shots must be > 0")
    rng = derive_rng(seed, f"tomo:{qubit.id}")
    grid = np.asarray(n_g_ext, dtype=float)
    p_true = np.clip(p1_curve(grid + dn_g, d, nu), 0.0, 1.0)
    p_meas = rng.binomial(shots, p_true) / shots
    return TomographyScan(qubit.id, grid, p_meas, shots, truth=(d, nu, dn_g))


def synth_injection_record(xqp_traj: XqpTrajectory, qubit: QubitSpec,
                           delays_s, baseline_t1_s: float,
                           noise_sd_per_s: float, seed,
                           pulse_end_s: float,
                           injector_position_mm: tuple[float, float] = (0.0, 0.0)
                           ) -> InjectionRecord:
    """Excess relaxation rates read off an x_qp trajectory at given delays.

    Negative delays sample during the pulse (measurement at pulse end), so
    the evaluation time is pulse_end + delay in all cases; times outside
    the trajectory raise.
    """
    rng = derive_rng(seed, f"inject:{qubit.id}")
    delays = np.asarray(delays_s, dtype=float)
    x = xqp_traj.at(pulse_end_s + delays)
    dg = gamma_from_xqp(x, qubit.island_gap_uev, qubit.f01_rad_s)
    if noise_sd_per_s > 0:
        dg = dg + rng.normal(0.0, noise_sd_per_s, len(delays))
    return InjectionRecord(qubit.id, delays, dg, baseline_t1_s,
                           injector_position_mm)


# ---------------------------------------------------------------------------
# Persistence: columnar CSV + JSON sidecar.

def write_trace_csv(trace: ParityTrace, path, sidecar: dict | None = None) -> None:
    """Columns t, signal, mask, hidden; metadata goes to `<path>.json`."""
    t = trace.times_s
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "signal", "mask", "hidden"])
        for i in range(len(trace)):
            writer.writerow([f"{t[i]:.6f}", f"{trace.samples[i]:.7g}",
                             int(trace.mask[i]), int(trace.hidden[i])])
    meta = {"qubit_id": trace.qubit_id, "dt_s": trace.dt_s,
            "t_start_s": trace.t_start_s, "n_samples": len(trace)}
    if sidecar:
        meta.update(sidecar)
    with open(str(path) + ".json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, sort_keys=True, indent=1)
        fh.write("\n")


def read_trace_csv(path) -> tuple[ParityTrace, dict]:
    data = np.genfromtxt(path, delimiter=",", names=True)
    with open(str(path) + ".json", encoding="utf-8") as fh:
        meta = json.load(fh)
    trace = ParityTrace(meta["qubit_id"], float(meta["dt_s"]),
                        np.atleast_1d(data["signal"]),
                        np.atleast_1d(data["hidden"]).astype(np.int8),
                        np.atleast_1d(data["mask"]).astype(bool),
                        float(meta["t_start_s"]))
    return trace, meta
