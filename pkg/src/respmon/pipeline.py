"""End-to-end assembly of both estimation stages over one recording."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import CsiTensor, InsufficientSamplesError, PipelineParams
from .fif import FifConfig
from .rate import RateTrace, build_spectrogram, latest_rate, trace_from_spectrogram
from .waveform import WaveformEstimate, estimate_waveform


@dataclass(frozen=True)
class PipelineResult:
    """Everything one recording yields.

    ``sample_indices`` are the time steps with a rate estimate (from the end
    of the first window to the end of the last complete one); the waveform
    covers the trailing ``wave_len`` samples starting at ``wave_start``.
    """

    trace: RateTrace
    sample_indices: np.ndarray
    sample_bpm: np.ndarray
    sample_breath: np.ndarray
    waveform: WaveformEstimate
    wave_start: int


def run_pipeline(
    csi: CsiTensor,
    params: PipelineParams | None = None,
    fif_config: FifConfig | None = None,
    presence_threshold: float = 2.0,
) -> PipelineResult:
    """Rate trace, per-sample estimates, and the rate-guided waveform.

    The waveform stage consumes the sliding re-estimate for the newest
    window, not the batch trace value.
    """
    if params is None:
        params = PipelineParams()
    if csi.time_samples < params.wave_len:
        raise InsufficientSamplesError(
            f"need {params.wave_len} samples for the waveform stage, "
            f"got {csi.time_samples}"
        )
    spectrogram = build_spectrogram(csi, params)
    trace = trace_from_spectrogram(spectrogram, params, presence_threshold)
    end = min(csi.time_samples, trace.coverage_end)
    indices = np.arange(params.window_len - 1, end)
    current_rate, _ = latest_rate(spectrogram, params, presence_threshold)
    wave = estimate_waveform(csi, current_rate, params, fif_config)
    return PipelineResult(
        trace=trace,
        sample_indices=indices,
        sample_bpm=trace.bpm_at(indices),
        sample_breath=trace.breath_at(indices),
        waveform=wave,
        wave_start=csi.time_samples - params.wave_len,
    )
