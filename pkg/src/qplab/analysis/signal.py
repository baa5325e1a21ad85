"""Digitization and mask-aware smoothing of parity-mapping signals."""

from __future__ import annotations

import numpy as np


def digitize(samples, threshold: float = 0.0, mask=None) -> np.ndarray:
    """Threshold an analog parity signal to int8 {-1, +1}, 0 where invalid.

    Samples equal to the threshold map to +1.  A ParityTrace may be passed
    directly, in which case its own mask is used.
    """
    if hasattr(samples, "samples"):  # ParityTrace
        if mask is None:
            mask = samples.mask
        samples = samples.samples
    x = np.asarray(samples)
    out = np.where(x >= threshold, 1, -1).astype(np.int8)
    if mask is not None:
        out = np.where(np.asarray(mask, dtype=bool), out, np.int8(0))
    return out


def moving_average(signal, n_w: int, mask=None) -> np.ndarray:
    """Centered moving mean over n_w samples (odd), truncated at the edges.

    Invalid samples are excluded from every window mean; output positions
    whose window holds no valid sample are NaN.
    """
    if n_w < 1 or n_w % 2 == 0:
        raise ValueError("n_w must be an odd positive integer")
    x = np.asarray(signal, dtype=float)
    if mask is None:
        valid = np.ones_like(x, dtype=bool)
    else:
        valid = np.asarray(mask, dtype=bool)
    kernel = np.ones(n_w)
    num = np.convolve(np.where(valid, x, 0.0), kernel, mode="same")
    den = np.convolve(valid.astype(float), kernel, mode="same")
    with np.errstate(invalid="ignore", divide="ignore"):
        out = num / den
    out[den == 0] = np.nan
    return out
