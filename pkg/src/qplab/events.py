"""Stochastic poisoning history of a cooldown.

Two event classes are generated:

* ionizing impacts: homogeneous Poisson over the chip; each deposits charge
  (detectable by qubits within a sensing radius) and flips each qubit's
  parity with probability flip_prob;
* stress-release bursts: chip-wide phonon events with a power-law decaying
  rate A * t^alpha (t measured in days at base temperature), no charge
  signal, same per-qubit detection coin.

All event times are seconds since t0.  Streams are plain arrays and merge
deterministically; generation of one stream is sequential in its RNG, but
distinct streams/seeds may be produced in parallel.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .constants import SECONDS_PER_DAY
from .rng import derive_rng

KIND_IMPACT = "impact"
KIND_BURST = "burst"

# Power-law rate is clamped below this time-at-base to keep it integrable;
# measured data starts well above (~0.5 day).
T_MIN_DAYS = 0.01


class ConfigError(ValueError):
    """Invalid model or timeline configuration."""


@dataclass(frozen=True)
class CooldownTimeline:
    """Cooldown bookkeeping: t=0 is the mixing chamber falling below 100 mK.

    thermal_excursions: (start_day, end_day) intervals above 100 mK.
    pulse_tube_off: (start_day, end_day) intervals with the pulse tube off;
    the tube is on otherwise.
    """

    duration_days: float
    thermal_excursions: tuple[tuple[float, float], ...] = ()
    pulse_tube_off: tuple[tuple[float, float], ...] = ()

    def __post_init__(self) -> None:
        if self.duration_days <= 0:
            raise ConfigError("duration_days must be > 0")
        for name in ("thermal_excursions", "pulse_tube_off"):
            intervals = sorted(getattr(self, name))
            for (a, b) in intervals:
                if not (0 <= a < b <= self.duration_days):
                    raise ConfigError(f"{name} interval ({a}, {b}) outside timeline")
            for (_, b), (a2, _) in zip(intervals, intervals[1:]):
                if a2 < b:
                    raise ConfigError(f"{name} intervals overlap")

    def pulse_tube_state(self, t_days: float) -> str:
        for a, b in self.pulse_tube_off:
            if a <= t_days < b:
                return "off"
        return "on"

    def time_since_reset_days(self, t_days: float) -> float:
        """Days since the most recent excursion ended (or since t0)."""
        last_end = 0.0
        for _, b in self.thermal_excursions:
            if b <= t_days:
                last_end = max(last_end, b)
        return t_days - last_end


@dataclass(frozen=True)
class BurstModel:
    """Chip-wide burst process with rate A * t_eff^alpha.

    amplitude_per_s: chip burst rate at t_eff = 1 day (1/s).
    exponent: power-law exponent alpha < 0.
    reset_on_excursion: restart the t_eff clock after each thermal excursion.
    flip_prob: per-qubit probability that a burst flips the parity.
    """

    amplitude_per_s: float
    exponent: float
    reset_on_excursion: bool = True
    flip_prob: float = 0.5

    def __post_init__(self) -> None:
        if self.amplitude_per_s < 0:
            raise ConfigError("amplitude_per_s must be >= 0")
        if self.exponent >= 0:
            raise ConfigError("burst exponent must be < 0")
        if not (0 <= self.flip_prob <= 1):
            raise ConfigError("flip_prob must be in [0, 1]")

    def rate_at(self, t_s: float, timeline: CooldownTimeline | None = None) -> float:
        """Burst rate (1/s) at absolute cooldown time t_s."""
        t_days = t_s / SECONDS_PER_DAY
        if timeline is not None and self.reset_on_excursion:
            t_days = timeline.time_since_reset_days(t_days)
        t_eff = max(t_days, T_MIN_DAYS)
        return self.amplitude_per_s * t_eff ** self.exponent


@dataclass(frozen=True)
class ImpactModel:
    """Ionizing impacts: constant rate over the whole chip.

    rate_per_s: impacts per second, entire chip.
    flip_prob: per-qubit parity-flip probability per impact.
    charge_jump_radius_mm: impacts within this distance of a qubit island
    deposit a detectable (>0.15e) offset-charge jump on that qubit.
    jump_magnitude_range_e: |jump| drawn uniformly from this range.
    chip_side_mm: square chip side; impact locations are uniform on it.
    """

    rate_per_s: float
    flip_prob: float = 0.5
    charge_jump_radius_mm: float = 1.0
    jump_magnitude_range_e: tuple[float, float] = (0.18, 0.32)
    chip_side_mm: float = 8.0

    def __post_init__(self) -> None:
        if self.rate_per_s < 0:
            raise ConfigError("rate_per_s must be >= 0")
        if not (0 <= self.flip_prob <= 1):
            raise ConfigError("flip_prob must be in [0, 1]")
        lo, hi = self.jump_magnitude_range_e
        if not (0 < lo <= hi):
            raise ConfigError("jump_magnitude_range_e must be 0 < lo <= hi")


@dataclass
class EventStream:
    """Time-ordered poisoning events for a fixed qubit roster.

    times_s: event times (strictly increasing).
    kinds: KIND_IMPACT or KIND_BURST per event.
    xy_mm: (n_events, 2) chip locations (bursts carry the chip center).
    flips: (n_events, n_qubits) parity-flip booleans.
    jumps_e: (n_events, n_qubits) signed charge jumps in e (0 = none).
    """

    qubit_ids: tuple[str, ...]
    times_s: np.ndarray
    kinds: np.ndarray
    xy_mm: np.ndarray
    flips: np.ndarray
    jumps_e: np.ndarray

    @classmethod
    def empty(cls, qubit_ids) -> "EventStream":
        nq = len(qubit_ids)
        return cls(tuple(qubit_ids), np.empty(0), np.empty(0, dtype=object),
                   np.empty((0, 2)), np.empty((0, nq), dtype=bool),
                   np.empty((0, nq)))

    def __len__(self) -> int:
        return len(self.times_s)

    def validate(self) -> None:
        n = len(self.times_s)
        if not (len(self.kinds) == len(self.xy_mm) == len(self.flips)
                == len(self.jumps_e) == n):
            raise ValueError("event arrays have mismatched lengths")
        if n > 1 and not np.all(np.diff(self.times_s) > 0):
            raise ValueError("event times must be strictly increasing")
        if self.flips.shape[1] != len(self.qubit_ids):
            raise ValueError("flip columns do not match qubit roster")

    def qubit_flip_times(self, qubit_id: str) -> np.ndarray:
        j = self.qubit_ids.index(qubit_id)
        return self.times_s[self.flips[:, j]]

    def qubit_jumps(self, qubit_id: str) -> tuple[np.ndarray, np.ndarray]:
        """(times, signed magnitudes) of charge jumps seen by one qubit."""
        j = self.qubit_ids.index(qubit_id)
        sel = self.jumps_e[:, j] != 0
        return self.times_s[sel], self.jumps_e[sel, j]


def sample_impacts(model: ImpactModel, horizon_s: float, seed,
                   qubit_positions_mm: dict[str, tuple[float, float]],
                   t_start_s: float = 0.0) -> EventStream:
    """Homogeneous Poisson impacts on [t_start, t_start + horizon)."""
    if horizon_s <= 0:
        raise ConfigError("horizon must be > 0")
    rng = derive_rng(seed, "impacts")
    qubit_ids = tuple(qubit_positions_mm)
    n = rng.poisson(model.rate_per_s * horizon_s)
    times = np.sort(rng.uniform(t_start_s, t_start_s + horizon_s, n))
    xy = rng.uniform(0.0, model.chip_side_mm, size=(n, 2))
    flips = rng.random((n, len(qubit_ids))) < model.flip_prob
    lo, hi = model.jump_magnitude_range_e
    magnitudes = rng.uniform(lo, hi, size=(n, len(qubit_ids)))
    signs = np.where(rng.random((n, len(qubit_ids))) < 0.5, -1.0, 1.0)
    pos = np.array([qubit_positions_mm[q] for q in qubit_ids])
    if n:
        dist = np.hypot(xy[:, 0, None] - pos[None, :, 0],
                        xy[:, 1, None] - pos[None, :, 1])
        near = dist <= model.charge_jump_radius_mm
    else:
        near = np.zeros((0, len(qubit_ids)), dtype=bool)
    jumps = np.where(near, signs * magnitudes, 0.0)
    kinds = np.full(n, KIND_IMPACT, dtype=object)
    stream = EventStream(qubit_ids, times, kinds, xy, flips, jumps)
    stream.validate()
    return stream


def sample_bursts(model: BurstModel, timeline: CooldownTimeline, seed,
                  qubit_ids, window_s: tuple[float, float] | None = None,
                  chip_side_mm: float = 8.0) -> EventStream:
    """Nonhomogeneous Poisson bursts via thinning.

    The rate restarts at each excursion end when reset_on_excursion is set,
    so thinning runs per inter-excursion segment with the segment's initial
    rate as the bound (the rate is decreasing within a segment).  A window
    restricts generation to [a, b) without changing the underlying process.
    """
    rng = derive_rng(seed, "bursts")
    qubit_ids = tuple(qubit_ids)
    t_lo = 0.0 if window_s is None else window_s[0]
    t_hi = timeline.duration_days * SECONDS_PER_DAY if window_s is None else window_s[1]
    if not (0 <= t_lo < t_hi <= timeline.duration_days * SECONDS_PER_DAY + 1e-9):
        raise ConfigError("window outside timeline")

    # Segment boundaries where t_eff restarts.
    resets = [0.0]
    if model.reset_on_excursion:
        resets += [b * SECONDS_PER_DAY for _, b in timeline.thermal_excursions]
    resets = sorted(set(resets)) + [timeline.duration_days * SECONDS_PER_DAY]

    times = []
    if model.amplitude_per_s > 0:
        alpha = model.exponent
        for seg_lo, seg_hi in zip(resets, resets[1:]):
            a, b = max(seg_lo, t_lo), min(seg_hi, t_hi)
            if a >= b:
                continue
            t_eff_lo = max((a - seg_lo) / SECONDS_PER_DAY, T_MIN_DAYS)
            lam_max = model.amplitude_per_s * t_eff_lo ** alpha
            n_cand = rng.poisson(lam_max * (b - a))
            cand = np.sort(rng.uniform(a, b, n_cand))
            t_eff = np.maximum((cand - seg_lo) / SECONDS_PER_DAY, T_MIN_DAYS)
            lam = model.amplitude_per_s * t_eff ** alpha
            keep = rng.random(n_cand) * lam_max < lam
            times.append(cand[keep])
    times = np.concatenate(times) if times else np.empty(0)

    n = len(times)
    flips = rng.random((n, len(qubit_ids))) < model.flip_prob
    xy = np.full((n, 2), chip_side_mm / 2.0)
    jumps = np.zeros((n, len(qubit_ids)))
    kinds = np.full(n, KIND_BURST, dtype=object)
    stream = EventStream(qubit_ids, times, kinds, xy, flips, jumps)
    stream.validate()
    return stream


def expected_burst_count(model: BurstModel, t0_s: float, t1_s: float) -> float:
    """Closed-form integral of the burst rate over [t0, t1] (no resets)."""
    a = max(t0_s / SECONDS_PER_DAY, T_MIN_DAYS)
    b = max(t1_s / SECONDS_PER_DAY, T_MIN_DAYS)
    alpha = model.exponent
    integral_days = (b ** (alpha + 1) - a ** (alpha + 1)) / (alpha + 1)
    clamped = max(min(t1_s / SECONDS_PER_DAY, T_MIN_DAYS) - t0_s / SECONDS_PER_DAY, 0.0)
    integral_days += clamped * T_MIN_DAYS ** alpha
    return model.amplitude_per_s * SECONDS_PER_DAY * integral_days


def merge_streams(a: EventStream, b: EventStream) -> EventStream:
    """Time-ordered union of two streams over the same qubit roster."""
    if a.qubit_ids != b.qubit_ids:
        raise ValueError("streams have different qubit rosters")
    times = np.concatenate([a.times_s, b.times_s])
    order = np.argsort(times, kind="stable")
    merged = EventStream(
        a.qubit_ids,
        times[order],
        np.concatenate([a.kinds, b.kinds])[order],
        np.concatenate([a.xy_mm, b.xy_mm])[order],
        np.concatenate([a.flips, b.flips])[order],
        np.concatenate([a.jumps_e, b.jumps_e])[order],
    )
    return merged


def effective_parity_rate(burst: BurstModel, impact: ImpactModel,
                          pulse_tube_boost_per_s: float, t_s: float,
                          pulse_tube_on: bool,
                          timeline: CooldownTimeline | None = None) -> float:
    """Expected single-qubit parity switching rate at cooldown time t_s.

    Additive decomposition: decaying bursts + constant impacts, each seen
    through the per-qubit detection coin, plus a pulse-tube term that the
    caller sets to zero for mountings that are insensitive to it.
    """
    rate = (burst.rate_at(t_s, timeline) * burst.flip_prob
            + impact.rate_per_s * impact.flip_prob)
    if pulse_tube_on:
        rate += pulse_tube_boost_per_s
    return rate


def write_events_jsonl(stream: EventStream, path) -> None:
    """One JSON object per line: t, kind, x, y, flips[], jumps[]."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"qubit_ids": list(stream.qubit_ids)}) + "\n")
        for i in range(len(stream)):
            rec = {
                "t": float(stream.times_s[i]),
                "kind": str(stream.kinds[i]),
                "x": float(stream.xy_mm[i, 0]),
                "y": float(stream.xy_mm[i, 1]),
                "flips": [bool(v) for v in stream.flips[i]],
                "jumps": [float(v) for v in stream.jumps_e[i]],
            }
            fh.write(json.dumps(rec) + "\n")


def read_events_jsonl(path) -> EventStream:
    with open(path, encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        qubit_ids = tuple(header["qubit_ids"])
        rows = [json.loads(line) for line in fh if line.strip()]
    n, nq = len(rows), len(qubit_ids)
    stream = EventStream(
        qubit_ids,
        np.array([r["t"] for r in rows]),
        np.array([r["kind"] for r in rows], dtype=object),
        np.array([[r["x"], r["y"]] for r in rows]).reshape(n, 2),
        np.array([r["flips"] for r in rows], dtype=bool).reshape(n, nq),
        np.array([r["jumps"] for r in rows], dtype=float).reshape(n, nq),
    )
    stream.validate()
    return stream
