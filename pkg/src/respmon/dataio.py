"""File formats: the raw CSI tensor with its metadata sidecar, CSV outputs,
and run manifests.

The tensor payload is IEEE-754 little-endian doubles, time-major: for each
time step, for each link, for each subcarrier, the real part then the
imaginary part. The sidecar is UTF-8 JSON carrying the dimensions needed to
interpret the payload plus the full simulation config when one exists.
Floats in CSVs are written with 17 significant digits so that outputs are
byte-reproducible and round-trip exactly.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .core import CsiTensor

SCHEMA_VERSION = 1


class TensorFormatError(ValueError):
    """The tensor file or its sidecar is malformed."""


def format_float(x: float) -> str:
    return format(float(x), ".17g")


def _meta_path(bin_path: Path) -> Path:
    return bin_path.with_name(bin_path.stem + ".meta.json")


def write_csi(
    out_dir: Path,
    csi: CsiTensor,
    seed: int | None = None,
    config: dict | None = None,
    name: str = "csi",
) -> tuple[Path, Path]:
    """Write payload and sidecar; returns (bin_path, meta_path)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    bin_path = out_dir / f"{name}.bin"
    meta_path = _meta_path(bin_path)
    payload = np.ascontiguousarray(csi.samples, dtype=np.complex128)
    bin_path.write_bytes(payload.astype("<c16", copy=False).tobytes())
    meta = {
        "schema_version": SCHEMA_VERSION,
        "time_samples": csi.time_samples,
        "links": len(csi.link_order),
        "subcarriers": csi.subcarriers,
        "sample_rate": csi.sample_rate,
        "link_order": [list(pair) for pair in csi.link_order],
        "seed": seed,
        "config": config,
    }
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return bin_path, meta_path


def read_csi(bin_path: Path) -> tuple[CsiTensor, dict]:
    """Load a tensor from its payload path; the sidecar sits next to it."""
    bin_path = Path(bin_path)
    meta_path = _meta_path(bin_path)
    if not bin_path.exists():
        raise FileNotFoundError(f"tensor payload not found: {bin_path}")
    if not meta_path.exists():
        raise FileNotFoundError(f"tensor sidecar not found: {meta_path}")
    try:
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise TensorFormatError(f"sidecar is not valid JSON: {exc}") from exc
    try:
        t = int(meta["time_samples"])
        links = int(meta["links"])
        k = int(meta["subcarriers"])
        fs = float(meta["sample_rate"])
        link_order = tuple(tuple(pair) for pair in meta["link_order"])
    except (KeyError, TypeError, ValueError) as exc:
        raise TensorFormatError(f"sidecar is missing or corrupts a field: {exc}") from exc
    raw = np.frombuffer(bin_path.read_bytes(), dtype="<c16")
    if raw.size != t * links * k:
        raise TensorFormatError(
            f"payload holds {raw.size} complex values, sidecar promises {t * links * k}"
        )
    samples = raw.reshape(t, links, k).astype(np.complex128)
    try:
        tensor = CsiTensor(samples, fs, link_order)
    except ValueError as exc:
        raise TensorFormatError(str(exc)) from exc
    return tensor, meta


def write_ground_truth(path: Path, displacement: np.ndarray, bpm: np.ndarray, sample_rate: float) -> Path:
    path = Path(path)
    lines = ["n,t_seconds,r,bpm"]
    for n, (r, b) in enumerate(zip(displacement, bpm)):
        t = n / sample_rate
        lines.append(f"{n},{format_float(t)},{format_float(r)},{format_float(b)}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def write_rate_csv(
    path: Path,
    sample_indices: np.ndarray,
    bpm: np.ndarray,
    breath: np.ndarray,
    sample_rate: float,
) -> Path:
    path = Path(path)
    lines = ["n,t_seconds,bpm_estimate,breath_present"]
    for n, b, present in zip(sample_indices, bpm, breath):
        t = n / sample_rate
        lines.append(f"{n},{format_float(t)},{format_float(b)},{int(present)}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def write_waveform_csv(
    path: Path,
    start_index: int,
    displacement: np.ndarray,
    sample_rate: float,
) -> Path:
    path = Path(path)
    lines = ["n,t_seconds,r_estimate"]
    for offset, value in enumerate(displacement):
        n = start_index + offset
        t = n / sample_rate
        lines.append(f"{n},{format_float(t)},{format_float(value)}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_series_csv(path: Path) -> dict[str, np.ndarray]:
    """Read a numeric CSV written by this module into named columns."""
    path = Path(path)
    text = path.read_text(encoding="utf-8").strip().splitlines()
    if not text:
        raise ValueError(f"{path} is empty")
    header = text[0].split(",")
    rows = [line.split(",") for line in text[1:]]
    if any(len(row) != len(header) for row in rows):
        raise ValueError(f"{path} has ragged rows")
    data = np.array(rows, dtype=np.float64) if rows else np.empty((0, len(header)))
    return {name: data[:, i] for i, name in enumerate(header)}


def write_manifest(path: Path, payload: dict) -> Path:
    """Persist the run description before any results are produced."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path
