"""Respiratory-waveform estimation guided by the rate estimate.

Over a long window the z-scored magnitude and phase of every
conjugate-multiplied subcarrier are screened by the strength of their
component at the estimated rate, sign-aligned against the strongest one,
and summed. Iterative filtering then splits the combined signal into
modes, and the mode whose in-band peak sits closest to the rate is the
waveform estimate.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import CsiTensor, PipelineParams, z_score
from .fif import FifConfig, fif_decompose
from .rate import conjugate_multiply, feature_columns, zoom_bin_frequencies, zoom_spectrum


@dataclass(frozen=True)
class SubcarrierSpectra:
    """Per-column component at the breathing rate, plus the strongest index."""

    values: np.ndarray
    primary_index: int


@dataclass(frozen=True)
class WaveformEstimate:
    displacement: np.ndarray
    source_imf_index: int
    rate_bpm: float


def build_z_matrix(csi: CsiTensor, params: PipelineParams) -> np.ndarray:
    """Z-scored magnitude/phase columns over the trailing waveform window.

    Shape (wave_len, 2 * K * derived links); column order matches
    ``rate.feature_columns``. Constant source columns come out all zero.
    """
    tail = csi.tail(params.wave_len)
    return z_score(feature_columns(conjugate_multiply(tail)))


def dtft_at_rate(
    z: np.ndarray,
    rate_hz: float,
    window_len: int,
    sample_rate: float,
) -> SubcarrierSpectra:
    """Single-frequency transform of each column's trailing samples.

    F_c = sum over the last ``window_len`` rows n of Z[n, c] *
    exp(-2j pi rate_hz n / fs), with n indexed within the full matrix so all
    columns share one phase reference.
    """
    rows = z.shape[0]
    if rows < window_len:
        raise ValueError("matrix shorter than the evaluation window")
    n = np.arange(rows - window_len, rows)
    phasor = np.exp(-2j * np.pi * rate_hz * n / sample_rate)
    values = phasor @ z[rows - window_len :]
    return SubcarrierSpectra(values=values, primary_index=select_primary(values))


def select_primary(values: np.ndarray) -> int:
    """Index of the strongest component; ties go to the first index."""
    if len(values) == 0:
        raise ValueError("no columns to select from")
    return int(np.argmax(np.abs(values)))


def combine_subcarriers(z: np.ndarray, spectra: SubcarrierSpectra) -> np.ndarray:
    """Weighted, sign-aligned sum of all columns.

    Each column is scaled by its component magnitude relative to the primary
    and negated when its component phase sits more than pi/2 away (after
    wrapping to (-pi, pi]): the breathing term is in phase or antiphase
    across subcarriers, never in between.
    """
    primary = spectra.values[spectra.primary_index]
    if np.abs(primary) == 0:
        raise ValueError("primary subcarrier has no component at the rate")
    delta = np.angle(primary) - np.angle(spectra.values)
    delta = (delta + np.pi) % (2.0 * np.pi) - np.pi
    signs = np.where(np.abs(delta) <= 0.5 * np.pi, 1.0, -1.0)
    weights = signs * np.abs(spectra.values) / np.abs(primary)
    return z @ weights


def imf_band_peaks(imfs: np.ndarray, params: PipelineParams) -> np.ndarray:
    """Dominant in-band frequency of each mode's trailing window.

    Peaks are searched on the same dense grid the spectrogram uses; argmax
    ties go to the lowest-frequency bin.
    """
    n_bins = params.window_len - 1
    freqs = zoom_bin_frequencies(params.band, n_bins)
    peaks = np.empty(imfs.shape[0])
    for i, imf in enumerate(imfs):
        spectrum = zoom_spectrum(
            imf[-params.window_len :], params.band, params.sample_rate, n_bins
        )
        peaks[i] = freqs[int(np.argmax(spectrum))]
    return peaks


def estimate_waveform(
    csi: CsiTensor,
    rate_hz: float,
    params: PipelineParams,
    fif_config: FifConfig | None = None,
) -> WaveformEstimate:
    """Full second stage: combine, decompose, and pick the breathing mode."""
    if fif_config is None:
        fif_config = FifConfig(filter_tuning=params.filter_tuning)
    z = build_z_matrix(csi, params)
    spectra = dtft_at_rate(z, rate_hz, params.window_len, params.sample_rate)
    combined = combine_subcarriers(z, spectra)
    modes = fif_decompose(combined, fif_config)
    if modes.count == 0:
        raise ValueError("combined signal produced no oscillatory modes")
    peaks = imf_band_peaks(modes.imfs, params)
    source = int(np.argmin(np.abs(peaks - rate_hz)))
    return WaveformEstimate(
        displacement=modes.imfs[source],
        source_imf_index=source,
        rate_bpm=60.0 * rate_hz,
    )
