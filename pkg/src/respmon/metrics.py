"""Accuracy criteria: rate RMSE, within-tolerance percentage, and the
sliding absolute waveform correlation."""
from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def rmse_bpm(estimate: np.ndarray, truth: np.ndarray) -> float:
    """Root-mean-square error between rate estimates and ground truth."""
    estimate = np.asarray(estimate, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if estimate.shape != truth.shape:
        raise ValueError("estimate and truth lengths differ")
    if estimate.size == 0:
        raise ValueError("empty input")
    return float(np.sqrt(np.mean((estimate - truth) ** 2)))


def pct_within(estimate: np.ndarray, truth: np.ndarray, tol_bpm: float = 3.0) -> float:
    """Percentage of estimates within ``tol_bpm`` of the ground truth."""
    estimate = np.asarray(estimate, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if estimate.shape != truth.shape:
        raise ValueError("estimate and truth lengths differ")
    if estimate.size == 0:
        raise ValueError("empty input")
    return float(100.0 * np.mean(np.abs(estimate - truth) <= tol_bpm))


def sliding_abs_corr(truth: np.ndarray, estimate: np.ndarray, window: int) -> np.ndarray:
    """|Pearson correlation| over every sliding window of the two signals.

    Returns one value per window start. Windows in which either signal is
    constant have an undefined correlation and are marked NaN; aggregate
    with nan-aware reductions so they drop out of averages.
    """
    truth = np.asarray(truth, dtype=np.float64)
    estimate = np.asarray(estimate, dtype=np.float64)
    if truth.shape != estimate.shape:
        raise ValueError("signals must have equal length")
    if window < 2:
        raise ValueError("window must be >= 2")
    if window > len(truth):
        raise ValueError("window longer than the signals")
    a = sliding_window_view(truth, window)
    b = sliding_window_view(estimate, window)
    ac = a - a.mean(axis=1, keepdims=True)
    bc = b - b.mean(axis=1, keepdims=True)
    denom = np.sqrt((ac**2).sum(axis=1) * (bc**2).sum(axis=1))
    out = np.full(a.shape[0], np.nan)
    ok = denom > 0
    out[ok] = np.abs((ac * bc).sum(axis=1)[ok] / denom[ok])
    return out
