"""CSI simulator: breath-modulated two-path channel with configurable noise.

Every random draw comes from a counter-based Philox stream keyed by
(seed, purpose), so regenerating any part of a simulation is independent of
evaluation order and of which other parts were generated. Re-running with
the same config yields bit-identical tensors.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np

from .core import CsiTensor

C_LIGHT = 299792458.0
# 5 GHz-band Wi-Fi carrier; only sets the radians-per-metre scale of the
# breathing phase swing.
DEFAULT_WAVELENGTH = C_LIGHT / 5.18e9

_STREAM_TAGS = {
    "static_amp": 1,
    "static_phase": 2,
    "alpha": 3,
    "dyn_phase": 4,
    "rot_dir": 5,
    "breath_depth": 6,
    "thermal": 7,
    "mult": 8,
    "phase": 9,
    "breather_phase": 10,
}


def stream(seed: int, purpose: str) -> np.random.Generator:
    """Independent generator for one draw purpose of one simulation seed."""
    key = np.array([np.uint64(seed), np.uint64(_STREAM_TAGS[purpose])], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class NoiseConfig:
    """Channel impairments: additive thermal, multiplicative, and phase noise.

    ``mult_std`` is the standard deviation of the underlying normal of the
    log-normal gain (median 1, no systematic bias). Phase noise is a uniform
    rotation on [-pi, pi] shared by all links of the receive NIC at each
    (time, subcarrier), matching a common local oscillator.
    """

    thermal_std: float = 0.0
    mult_std: float = 0.0
    phase_noise: bool = False

    def __post_init__(self) -> None:
        if self.thermal_std < 0 or self.mult_std < 0:
            raise ValueError("noise standard deviations must be >= 0")


@dataclass(frozen=True)
class SimConfig:
    """Full description of one simulated recording."""

    seed: int = 1
    duration_samples: int = 400
    sample_rate: float = 9.9
    subcarriers: int = 114
    tx_antennas: int = 2
    rx_antennas: int = 2
    carrier_wavelength: float = DEFAULT_WAVELENGTH
    antenna_separation: float = 0.05
    txrx_separation: float = 5.0
    breather_count: int = 1
    breath_bpm: float = 15.0
    breath_phase: float = 0.0
    breath_depth_range: tuple[float, float] = (0.005, 0.01)
    alpha_range: tuple[float, float] = (0.2, 2.0)
    static_amp_range: tuple[float, float] = (10.0, 20.0)
    incidence_angle: float = math.pi / 3
    noise: NoiseConfig = field(default_factory=NoiseConfig)

    def __post_init__(self) -> None:
        if self.seed < 0 or self.seed > 2**64 - 1:
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        if self.duration_samples < 1:
            raise ValueError("duration_samples must be >= 1")
        if self.sample_rate <= 0 or self.carrier_wavelength <= 0:
            raise ValueError("sample_rate and carrier_wavelength must be > 0")
        if self.subcarriers < 1 or self.tx_antennas < 1 or self.rx_antennas < 2:
            raise ValueError("need subcarriers >= 1, tx >= 1, rx >= 2")
        if self.breather_count < 1:
            raise ValueError("breather_count must be >= 1")
        if self.breath_bpm <= 0:
            raise ValueError("breath_bpm must be > 0")
        for name in ("breath_depth_range", "alpha_range", "static_amp_range"):
            lo, hi = getattr(self, name)
            if not (0 <= lo <= hi):
                raise ValueError(f"{name} must satisfy 0 <= lo <= hi")

    @property
    def link_count(self) -> int:
        return self.tx_antennas * self.rx_antennas

    @property
    def link_order(self) -> tuple[tuple[int, int], ...]:
        return tuple(
            (a, b)
            for a in range(1, self.tx_antennas + 1)
            for b in range(1, self.rx_antennas + 1)
        )

    @property
    def sample_period(self) -> float:
        return 1.0 / self.sample_rate

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "SimConfig":
        data = dict(data)
        if "noise" in data and isinstance(data["noise"], dict):
            data["noise"] = NoiseConfig(**data["noise"])
        for name in ("breath_depth_range", "alpha_range", "static_amp_range"):
            if name in data:
                data[name] = tuple(data[name])
        return cls(**data)


@dataclass(frozen=True)
class GroundTruth:
    """Unit-amplitude chest displacement and instantaneous rate per sample."""

    displacement: np.ndarray
    bpm: np.ndarray


@dataclass(frozen=True)
class LinkDraws:
    """Per-link channel parameters sampled once per simulation.

    Static terms are per (link, subcarrier); dynamic terms carry a leading
    breather axis. ``rot_dir`` is the +-1 rotation sense of the breathing
    phase, ``breath_phase`` the per-breather waveform phase offset.
    """

    static: np.ndarray
    alpha: np.ndarray
    dyn_phase: np.ndarray
    rot_dir: np.ndarray
    depth: np.ndarray
    path_len: np.ndarray
    breath_phase: np.ndarray


@dataclass(frozen=True)
class NoiseDraws:
    """Standard-normal / uniform raw noise; scaled inside apply_noise."""

    mult_normal: np.ndarray | None
    eta: np.ndarray | None
    thermal: np.ndarray | None


@dataclass(frozen=True)
class SimResult:
    csi: CsiTensor
    truth: GroundTruth
    config: SimConfig


def breath_waveform(config: SimConfig, n: np.ndarray | int, phase: float | None = None) -> np.ndarray:
    """Sinusoidal chest displacement at sample indices ``n``."""
    n = np.asarray(n, dtype=np.float64)
    if phase is None:
        phase = config.breath_phase
    rate_hz = config.breath_bpm / 60.0
    return np.sin(2.0 * np.pi * rate_hz * n * config.sample_period + phase)


def path_lengths(config: SimConfig) -> np.ndarray:
    """Reflected path length per link for a fixed 2-D layout.

    Both antenna arrays are uniform linear arrays facing each other across
    ``txrx_separation`` metres with the breather midway between them; the
    layout only shifts static phases, which are randomised anyway.
    """
    sep = config.antenna_separation
    tx = np.array([(0.0, a * sep) for a in range(config.tx_antennas)])
    rx = np.array([(config.txrx_separation, b * sep) for b in range(config.rx_antennas)])
    person = np.array([0.5 * config.txrx_separation, 0.0])
    lengths = [
        np.linalg.norm(tx[a] - person) + np.linalg.norm(person - rx[b])
        for a in range(config.tx_antennas)
        for b in range(config.rx_antennas)
    ]
    return np.array(lengths)


def draw_link_params(config: SimConfig) -> LinkDraws:
    """Sample all per-link channel parameters from their purpose streams."""
    shape = (config.link_count, config.subcarriers)
    dyn_shape = (config.breather_count,) + shape
    amp = stream(config.seed, "static_amp").uniform(*config.static_amp_range, size=shape)
    phase = stream(config.seed, "static_phase").uniform(0.0, 2.0 * np.pi, size=shape)
    alpha = stream(config.seed, "alpha").uniform(*config.alpha_range, size=dyn_shape)
    dyn_phase = stream(config.seed, "dyn_phase").uniform(0.0, 2.0 * np.pi, size=dyn_shape)
    rot = np.where(
        stream(config.seed, "rot_dir").integers(0, 2, size=dyn_shape) == 0, -1.0, 1.0
    )
    depth = stream(config.seed, "breath_depth").uniform(
        *config.breath_depth_range, size=(config.breather_count, config.link_count)
    )
    offsets = stream(config.seed, "breather_phase").uniform(
        0.0, 2.0 * np.pi, size=config.breather_count
    )
    offsets[0] = config.breath_phase
    return LinkDraws(
        static=amp * np.exp(1j * phase),
        alpha=alpha,
        dyn_phase=dyn_phase,
        rot_dir=rot,
        depth=depth,
        path_len=path_lengths(config),
        breath_phase=offsets,
    )


def ideal_csi(config: SimConfig, draws: LinkDraws, displacement: np.ndarray) -> np.ndarray:
    """Noise-free CSI tensor for given per-breather displacement waveforms.

    ``displacement`` has shape (breathers, time). Each breather contributes a
    dynamic path whose phase advances by ``rot_dir * (2*pi/wavelength) *
    depth * sin(incidence_angle) * displacement`` on top of a random phase
    and the fixed geometric path delay; the static component is untouched.
    """
    displacement = np.atleast_2d(np.asarray(displacement, dtype=np.float64))
    if displacement.shape[0] != config.breather_count:
        raise ValueError("displacement must have one row per breather")
    k0 = 2.0 * np.pi / config.carrier_wavelength
    sin_theta = math.sin(config.incidence_angle)
    out = np.broadcast_to(
        draws.static[None, :, :],
        (displacement.shape[1],) + draws.static.shape,
    ).astype(np.complex128)
    out = out.copy()
    for p in range(config.breather_count):
        swing = k0 * sin_theta * draws.depth[p][None, :, None] * displacement[p][:, None, None]
        phase = (
            draws.dyn_phase[p][None, :, :]
            - k0 * draws.path_len[None, :, None]
            - draws.rot_dir[p][None, :, :] * swing
        )
        out += draws.alpha[p][None, :, :] * np.exp(1j * phase)
    return out


def draw_noise(config: SimConfig, time_samples: int) -> NoiseDraws:
    """Raw noise draws for a recording; skips streams that are switched off."""
    noise = config.noise
    shape = (time_samples, config.link_count, config.subcarriers)
    mult = (
        stream(config.seed, "mult").standard_normal(shape)
        if noise.mult_std > 0
        else None
    )
    # One rotation per (time, subcarrier), shared by every link of the
    # receive NIC: conjugate multiplication can then cancel it exactly.
    eta = (
        stream(config.seed, "phase").uniform(-np.pi, np.pi, size=(time_samples, config.subcarriers))
        if noise.phase_noise
        else None
    )
    thermal = (
        stream(config.seed, "thermal").standard_normal(shape + (2,))
        if noise.thermal_std > 0
        else None
    )
    return NoiseDraws(mult_normal=mult, eta=eta, thermal=thermal)


def apply_noise(h: np.ndarray, noise: NoiseConfig, draws: NoiseDraws) -> np.ndarray:
    """Corrupt ideal CSI: log-normal gain, shared phase rotation, thermal noise.

    With everything disabled the input is returned unchanged, bit for bit.
    """
    out = h
    if noise.mult_std > 0:
        out = out * np.exp(noise.mult_std * draws.mult_normal)
    if noise.phase_noise:
        out = out * np.exp(-1j * draws.eta)[:, None, :]
    if noise.thermal_std > 0:
        eps = noise.thermal_std * (draws.thermal[..., 0] + 1j * draws.thermal[..., 1])
        out = out + eps
    return out


def simulate(config: SimConfig) -> SimResult:
    """Generate a seeded CSI recording with ground truth.

    Deterministic in (config, seed): repeated calls produce bit-identical
    tensors. The returned ground truth tracks the first breather.
    """
    draws = draw_link_params(config)
    n = np.arange(config.duration_samples)
    displacement = np.stack(
        [
            breath_waveform(config, n, phase=draws.breath_phase[p])
            for p in range(config.breather_count)
        ]
    )
    h = ideal_csi(config, draws, displacement)
    h = apply_noise(h, config.noise, draw_noise(config, config.duration_samples))
    csi = CsiTensor(h, config.sample_rate, config.link_order)
    truth = GroundTruth(
        displacement=displacement[0],
        bpm=np.full(config.duration_samples, float(config.breath_bpm)),
    )
    return SimResult(csi=csi, truth=truth, config=config)


def config_with_noise(base: SimConfig, noise: NoiseConfig, seed: int | None = None) -> SimConfig:
    """Copy of ``base`` with a different noise block (and optionally seed)."""
    if seed is None:
        return replace(base, noise=noise)
    return replace(base, noise=noise, seed=seed)
