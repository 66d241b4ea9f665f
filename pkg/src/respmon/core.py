"""Shared numeric primitives, tensor layout, and pipeline configuration."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class InsufficientSamplesError(ValueError):
    """An operation needs more time samples than the input provides."""


@dataclass(frozen=True)
class BandLimits:
    """Frequency band of plausible breathing rates, in Hz."""

    f_min: float = 0.133
    f_max: float = 0.833

    def __post_init__(self) -> None:
        if not (0.0 < self.f_min < self.f_max):
            raise ValueError(
                f"band limits must satisfy 0 < f_min < f_max, got "
                f"[{self.f_min}, {self.f_max}]"
            )


@dataclass(frozen=True)
class PipelineParams:
    """Knobs shared by the rate and waveform stages.

    Defaults correspond to a 9.9 Hz CSI stream: 150-sample stationary
    windows advancing by 10 samples (~1 s per rate update), a 46-window
    trace-search depth, and 600-sample waveform windows.
    """

    window_len: int = 150
    window_count: int = 46
    overlap: int = 140
    smoothing: float = 0.5
    wave_len: int = 600
    filter_tuning: float = 2.7
    transition_std_bpm: float = 4.552
    band: BandLimits = field(default_factory=BandLimits)
    sample_rate: float = 9.9

    def __post_init__(self) -> None:
        if not 0 <= self.overlap < self.window_len:
            raise ValueError("overlap must satisfy 0 <= overlap < window_len")
        if self.wave_len <= self.window_len:
            raise ValueError("wave_len must exceed window_len")
        if self.window_count < 1:
            raise ValueError("window_count must be >= 1")
        if self.smoothing < 0:
            raise ValueError("smoothing must be >= 0")
        if self.filter_tuning <= 0:
            raise ValueError("filter_tuning must be > 0")
        if self.transition_std_bpm <= 0:
            raise ValueError("transition_std_bpm must be > 0")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be > 0")
        if self.band.f_max >= 0.5 * self.sample_rate:
            raise ValueError("band must lie below the Nyquist frequency")

    @property
    def hop(self) -> int:
        """Samples between the starts of adjacent windows."""
        return self.window_len - self.overlap

    @property
    def sample_period(self) -> float:
        return 1.0 / self.sample_rate


@dataclass(frozen=True)
class CsiTensor:
    """Complex CSI samples indexed (time, link, subcarrier).

    ``link_order`` lists the (transmit, receive) antenna pair of each link
    slot, 1-based, row-major in transmit then receive. All entries must be
    finite; NaN/Inf are rejected up front so they can never reach the
    estimation stages.
    """

    samples: np.ndarray
    sample_rate: float
    link_order: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=np.complex128)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "link_order", tuple(map(tuple, self.link_order)))
        if samples.ndim != 3:
            raise ValueError("samples must have shape (time, link, subcarrier)")
        t, links, k = samples.shape
        if t < 1 or k < 1:
            raise ValueError("tensor must contain at least one sample and subcarrier")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be > 0")
        if len(self.link_order) != links:
            raise ValueError("link_order length must match the link axis")
        a = max(pair[0] for pair in self.link_order)
        b = max(pair[1] for pair in self.link_order)
        expected = tuple((i, j) for i in range(1, a + 1) for j in range(1, b + 1))
        if self.link_order != expected:
            raise ValueError("link_order must be the full row-major (tx, rx) grid")
        if not np.all(np.isfinite(samples.view(np.float64))):
            raise ValueError("CSI samples must be finite")

    @property
    def time_samples(self) -> int:
        return self.samples.shape[0]

    @property
    def subcarriers(self) -> int:
        return self.samples.shape[2]

    @property
    def tx_count(self) -> int:
        return self.link_order[-1][0]

    @property
    def rx_count(self) -> int:
        return self.link_order[-1][1]

    @property
    def sample_period(self) -> float:
        return 1.0 / self.sample_rate

    def tail(self, length: int) -> "CsiTensor":
        """Return a tensor holding the trailing ``length`` samples."""
        if length > self.time_samples:
            raise InsufficientSamplesError(
                f"need {length} samples, tensor has {self.time_samples}"
            )
        return CsiTensor(self.samples[-length:], self.sample_rate, self.link_order)


def window_starts(total_samples: int, window_len: int, overlap: int) -> list[int]:
    """Start indices of sliding windows that fit entirely in the recording.

    Window ``w`` spans ``[w*(window_len-overlap), w*(window_len-overlap) +
    window_len - 1]``; only complete windows are emitted.
    """
    if not 0 <= overlap < window_len:
        raise ValueError("overlap must satisfy 0 <= overlap < window_len")
    if window_len > total_samples:
        raise ValueError("window_len exceeds the number of samples")
    hop = window_len - overlap
    count = (total_samples - window_len) // hop + 1
    return [w * hop for w in range(count)]


def clamped_ceil(x: float) -> int:
    """Ceiling clamped below at zero: max(0, ceil(x))."""
    if not math.isfinite(x):
        raise ValueError("clamped_ceil needs a finite input")
    return max(0, math.ceil(x))


def z_score(x: np.ndarray) -> np.ndarray:
    """Normalise to zero mean and unit population standard deviation.

    Operates along axis 0, so a 2-D input is normalised column by column.
    Constant slices carry no information and map to all zeros rather than
    dividing by zero.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] < 2:
        raise ValueError("z_score needs at least two samples")
    mu = x.mean(axis=0)
    sd = x.std(axis=0)
    out = np.zeros_like(x)
    if x.ndim == 1:
        if sd > 0:
            out = (x - mu) / sd
        return out
    ok = sd > 0
    out[:, ok] = (x[:, ok] - mu[ok]) / sd[ok]
    return out
