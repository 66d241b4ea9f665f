"""Respiratory-rate estimation from windowed CSI.

Per window: conjugate-multiply the antenna links against the reference
receiver (cancelling common phase noise), autocorrelate the magnitude and
phase of every subcarrier, combine the autocorrelations weighted by their
in-band spectral fraction, and take a band-limited zoom spectrum. Stacking
windows gives a spectrogram through which a dynamic program carves the
maximum-energy frequency trace under a Gaussian transition prior.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import zoom_fft

from .core import (
    BandLimits,
    CsiTensor,
    InsufficientSamplesError,
    PipelineParams,
    clamped_ceil,
    window_starts,
)


@dataclass(frozen=True)
class ConjugateLinkSet:
    """Conjugate-multiplied CSI per derived link.

    ``values`` has shape (time, derived link, subcarrier); ``links`` names
    each derived link by its (tx, rx) pair, the reference receiver excluded.
    """

    values: np.ndarray
    links: tuple[tuple[int, int], ...]

    @property
    def link_count(self) -> int:
        return self.values.shape[1]

    @property
    def subcarriers(self) -> int:
        return self.values.shape[2]


def conjugate_multiply(csi: CsiTensor) -> ConjugateLinkSet:
    """Multiply every link by the conjugate of its transmitter's link to rx 1.

    Phase rotations common to the receive NIC cancel in the product, leaving
    magnitude and phase that both follow the breathing motion.
    """
    if csi.rx_count < 2:
        raise ValueError("conjugate multiplication needs at least two receive antennas")
    index = {pair: i for i, pair in enumerate(csi.link_order)}
    values = []
    links = []
    for a in range(1, csi.tx_count + 1):
        reference = csi.samples[:, index[(a, 1)], :]
        for b in range(2, csi.rx_count + 1):
            values.append(csi.samples[:, index[(a, b)], :] * np.conj(reference))
            links.append((a, b))
    return ConjugateLinkSet(values=np.stack(values, axis=1), links=tuple(links))


def feature_columns(cm: ConjugateLinkSet) -> np.ndarray:
    """Magnitude and phase of every derived subcarrier as real columns.

    Layout per derived link i: its K magnitude columns, then its K phase
    columns; links concatenated in order. Shape (time, 2*K*link_count).
    """
    blocks = []
    for i in range(cm.link_count):
        blocks.append(np.abs(cm.values[:, i, :]))
        blocks.append(np.angle(cm.values[:, i, :]))
    return np.concatenate(blocks, axis=1)


def acf(x: np.ndarray) -> np.ndarray:
    """Normalised autocorrelation with lag 0 dropped.

    r(tau) = sum_n (x_n - mean)(x_{n+tau} - mean) / sum_n (x_n - mean)^2 for
    tau = 1..N-1. Lag 0 is omitted because white noise correlates only
    there. Works along axis 0 for 2-D input. Zero-variance columns map to
    all zeros.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    if n < 2:
        raise ValueError("acf needs at least two samples")
    flat = x.ndim == 1
    cols = x.reshape(n, -1)
    centred = cols - cols.mean(axis=0)
    size = 1 << int(np.ceil(np.log2(2 * n - 1)))
    power = np.abs(np.fft.rfft(centred, n=size, axis=0)) ** 2
    raw = np.fft.irfft(power, n=size, axis=0)[:n]
    denom = raw[0].copy()
    out = np.zeros((n - 1, cols.shape[1]))
    ok = denom > 0
    out[:, ok] = raw[1:, ok] / denom[ok]
    return out[:, 0] if flat else out.reshape((n - 1,) + x.shape[1:])


def build_acf_matrix(cm: ConjugateLinkSet) -> np.ndarray:
    """Autocorrelations of all magnitude/phase columns of one window.

    Shape (window_len - 1, 2 * K * link_count), column order as in
    ``feature_columns``.
    """
    return acf(feature_columns(cm))


def bnr(x: np.ndarray, band: BandLimits, sample_rate: float) -> float | np.ndarray:
    """Fraction of one-sided spectral energy inside the breathing band.

    Denominator spans every rfft bin including DC; the band excludes DC by
    construction. Works along axis 0 for 2-D input, returning one ratio per
    column. An all-zero column has no energy anywhere and scores 0.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] < 2:
        raise ValueError("bnr needs at least two samples")
    power = np.abs(np.fft.rfft(x, axis=0)) ** 2
    freqs = np.fft.rfftfreq(x.shape[0], d=1.0 / sample_rate)
    in_band = (freqs >= band.f_min) & (freqs <= band.f_max)
    total = power.sum(axis=0)
    banded = power[in_band].sum(axis=0)
    if x.ndim == 1:
        return float(banded / total) if total > 0 else 0.0
    out = np.zeros(x.shape[1])
    ok = total > 0
    out[ok] = banded[ok] / total[ok]
    return out


def bnr_combine(matrix: np.ndarray, band: BandLimits, sample_rate: float) -> np.ndarray:
    """Sum the columns of ``matrix`` weighted by their in-band ratios."""
    weights = bnr(matrix, band, sample_rate)
    return matrix @ weights


def zoom_spectrum(
    x: np.ndarray,
    band: BandLimits,
    sample_rate: float,
    n_bins: int | None = None,
) -> np.ndarray:
    """DFT magnitude on a dense grid across the breathing band.

    Evaluates |sum_n x_n exp(-2j pi f n / fs)| at ``n_bins`` evenly spaced
    frequencies from f_min to f_max inclusive. Denser than the FFT grid but
    no extra resolution; it interpolates the same underlying spectrum.
    """
    x = np.asarray(x, dtype=np.float64)
    if n_bins is None:
        n_bins = len(x)
    transform = zoom_fft(
        x, [band.f_min, band.f_max], m=n_bins, fs=sample_rate, endpoint=True
    )
    return np.abs(transform)


def zoom_bin_frequencies(band: BandLimits, n_bins: int) -> np.ndarray:
    return np.linspace(band.f_min, band.f_max, n_bins)


@dataclass(frozen=True)
class Spectrogram:
    """Nonnegative zoom-spectrum magnitudes, one column per window."""

    magnitudes: np.ndarray
    bin_frequencies: np.ndarray

    @property
    def bins(self) -> int:
        return self.magnitudes.shape[0]

    @property
    def windows(self) -> int:
        return self.magnitudes.shape[1]

    def tail(self, windows: int) -> "Spectrogram":
        return Spectrogram(self.magnitudes[:, -windows:], self.bin_frequencies)


def build_spectrogram(csi: CsiTensor, params: PipelineParams) -> Spectrogram:
    """Column w = zoom spectrum of the combined ACF of window w.

    The combining weights are recomputed per window, so the effective
    subcarrier mix can differ from one column to the next.
    """
    if csi.time_samples < params.window_len:
        raise InsufficientSamplesError(
            f"need at least {params.window_len} samples, got {csi.time_samples}"
        )
    starts = window_starts(csi.time_samples, params.window_len, params.overlap)
    n_bins = params.window_len - 1
    columns = np.empty((n_bins, len(starts)))
    for w, start in enumerate(starts):
        window = CsiTensor(
            csi.samples[start : start + params.window_len],
            csi.sample_rate,
            csi.link_order,
        )
        matrix = build_acf_matrix(conjugate_multiply(window))
        combined = bnr_combine(matrix, params.band, params.sample_rate)
        columns[:, w] = zoom_spectrum(combined, params.band, params.sample_rate, n_bins)
    return Spectrogram(
        magnitudes=columns,
        bin_frequencies=zoom_bin_frequencies(params.band, n_bins),
    )


def normalize_columns(magnitudes: np.ndarray) -> np.ndarray:
    """Scale each column to unit sum so energies are comparable across
    windows and against the transition prior; zero columns stay zero."""
    sums = magnitudes.sum(axis=0, keepdims=True)
    safe = np.where(sums > 0, sums, 1.0)
    return magnitudes / safe


def amtc(
    spectrogram: Spectrogram,
    smoothing: float,
    transition_std_bpm: float,
) -> np.ndarray:
    """Maximum-energy frequency trace under a Gaussian transition prior.

    Solves argmax over bin-valued traces q of sum_w S[q_w, w] + smoothing *
    (log of a uniform start prior plus Gaussian log-transitions) exactly, by
    dynamic programming over (bin, window). The energy term is linear in the
    magnitudes as given; feed column-normalised magnitudes (see
    ``trace_from_spectrogram``) when windows must carry equal weight. The
    transition std is converted from BPM to bin units via the grid spacing.
    Argmax ties break toward the lower bin index.

    Returns the bin index of the trace in each window.
    """
    s = spectrogram.magnitudes
    bins, windows = s.shape
    if windows < 1:
        raise ValueError("spectrogram has no windows")
    if bins == 1:
        return np.zeros(windows, dtype=np.intp)
    freqs = spectrogram.bin_frequencies
    bin_spacing_bpm = 60.0 * (freqs[1] - freqs[0])
    sigma = transition_std_bpm / bin_spacing_bpm
    offsets = np.arange(bins, dtype=np.float64)
    log_gauss = -0.5 * ((offsets[:, None] - offsets[None, :]) / sigma) ** 2 - np.log(
        sigma * np.sqrt(2.0 * np.pi)
    )
    value = s[:, 0] + smoothing * np.log(1.0 / bins)
    back = np.zeros((bins, windows), dtype=np.intp)
    for w in range(1, windows):
        scores = value[None, :] + smoothing * log_gauss
        back[:, w] = np.argmax(scores, axis=1)
        value = s[:, w] + scores[np.arange(bins), back[:, w]]
    trace = np.zeros(windows, dtype=np.intp)
    trace[-1] = int(np.argmax(value))
    for w in range(windows - 1, 0, -1):
        trace[w - 1] = back[trace[w], w]
    return trace


def breath_presence(
    spectrogram: Spectrogram,
    trace: np.ndarray,
    threshold: float = 2.0,
) -> np.ndarray:
    """Breath detected in window w iff the traced bin's magnitude is at
    least ``threshold`` times the column median (and nonzero)."""
    s = spectrogram.magnitudes
    picked = s[trace, np.arange(s.shape[1])]
    medians = np.median(s, axis=0)
    return (picked > 0) & (picked >= threshold * medians)


@dataclass(frozen=True)
class RateTrace:
    """Per-window rate estimates with breath-presence flags.

    ``frequencies_hz[w]`` is the traced bin frequency of window w;
    ``bpm_at``/``breath_at`` map a sample index onto the window whose last
    sample most recently completed, clamping indices before the first
    window's end to window 0.
    """

    frequencies_hz: np.ndarray
    breath: np.ndarray
    window_len: int
    hop: int

    @property
    def windows(self) -> int:
        return len(self.frequencies_hz)

    def window_index(self, n: np.ndarray | int) -> np.ndarray | int:
        scalar = np.isscalar(n)
        n = np.atleast_1d(np.asarray(n))
        if np.any(n < 0):
            raise ValueError("sample index must be >= 0")
        idx = np.array(
            [clamped_ceil((v - self.window_len + 1) / self.hop) for v in n],
            dtype=np.intp,
        )
        if np.any(idx >= self.windows):
            raise ValueError("sample index beyond the covered range")
        return int(idx[0]) if scalar else idx

    def bpm_at(self, n: np.ndarray | int) -> np.ndarray | float:
        idx = self.window_index(n)
        out = 60.0 * self.frequencies_hz[idx]
        return float(out) if np.isscalar(idx) else out

    def breath_at(self, n: np.ndarray | int) -> np.ndarray | bool:
        idx = self.window_index(n)
        out = self.breath[idx]
        return bool(out) if np.isscalar(idx) else out

    @property
    def coverage_end(self) -> int:
        """One past the last sample index mapped to an existing window."""
        return (self.windows - 1) * self.hop + self.window_len


def trace_from_spectrogram(
    spectrogram: Spectrogram,
    params: PipelineParams,
    presence_threshold: float = 2.0,
) -> RateTrace:
    """Carve the rate trace from a spectrogram (column-normalised first)."""
    normalised = Spectrogram(
        normalize_columns(spectrogram.magnitudes), spectrogram.bin_frequencies
    )
    trace = amtc(normalised, params.smoothing, params.transition_std_bpm)
    present = breath_presence(spectrogram, trace, presence_threshold)
    return RateTrace(
        frequencies_hz=spectrogram.bin_frequencies[trace],
        breath=present,
        window_len=params.window_len,
        hop=params.hop,
    )


def estimate_rate_trace(
    csi: CsiTensor,
    params: PipelineParams,
    presence_threshold: float = 2.0,
) -> RateTrace:
    """Full first stage: spectrogram construction plus trace carving."""
    return trace_from_spectrogram(
        build_spectrogram(csi, params), params, presence_threshold
    )


def latest_rate(
    spectrogram: Spectrogram,
    params: PipelineParams,
    presence_threshold: float = 2.0,
) -> tuple[float, bool]:
    """Sliding re-estimate for the newest window.

    Re-runs the trace search over the trailing ``window_count`` windows and
    reports only the final window's frequency and presence flag; this is the
    rate handed to the waveform stage.
    """
    depth = min(params.window_count, spectrogram.windows)
    trace = trace_from_spectrogram(spectrogram.tail(depth), params, presence_threshold)
    return float(trace.frequencies_hz[-1]), bool(trace.breath[-1])


def rate_at(trace: RateTrace, n: int) -> float:
    """Rate in BPM at sample index ``n``."""
    return trace.bpm_at(n)
