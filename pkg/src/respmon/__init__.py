"""Respiration monitoring from Wi-Fi channel state information."""

__version__ = "0.1.0"

from .core import (
    BandLimits,
    CsiTensor,
    InsufficientSamplesError,
    PipelineParams,
    clamped_ceil,
    window_starts,
    z_score,
)
from .fif import FifConfig, ImfSet, fif_decompose
from .metrics import pct_within, rmse_bpm, sliding_abs_corr
from .pipeline import PipelineResult, run_pipeline
from .rate import (
    RateTrace,
    Spectrogram,
    amtc,
    build_spectrogram,
    estimate_rate_trace,
    zoom_spectrum,
)
from .sim import GroundTruth, NoiseConfig, SimConfig, SimResult, simulate
from .sweep import MetricReport, SweepSpec, run_sweep, run_sweeps
from .waveform import WaveformEstimate, estimate_waveform

__all__ = [
    "BandLimits",
    "CsiTensor",
    "FifConfig",
    "GroundTruth",
    "ImfSet",
    "InsufficientSamplesError",
    "MetricReport",
    "NoiseConfig",
    "PipelineParams",
    "PipelineResult",
    "RateTrace",
    "SimConfig",
    "SimResult",
    "Spectrogram",
    "SweepSpec",
    "WaveformEstimate",
    "amtc",
    "build_spectrogram",
    "clamped_ceil",
    "estimate_rate_trace",
    "estimate_waveform",
    "fif_decompose",
    "pct_within",
    "rmse_bpm",
    "run_pipeline",
    "run_sweep",
    "run_sweeps",
    "simulate",
    "sliding_abs_corr",
    "window_starts",
    "z_score",
    "zoom_spectrum",
]
