"""Noise-robustness sweeps: simulate, estimate, score, aggregate.

A sweep varies one noise knob over a list of levels, runs several seeded
simulations per level, pushes each recording through both estimation
stages, and reports rate RMSE / within-3-BPM percentage / waveform
correlation per run plus seed-averaged summaries. Failed runs are recorded
with NaN metrics and the error message; they never abort the sweep.
"""
from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from . import metrics
from .core import PipelineParams
from .dataio import format_float
from .pipeline import run_pipeline
from .sim import NoiseConfig, SimConfig, simulate

NOISE_KINDS = ("thermal", "multiplicative", "phase")

REPORT_HEADER = "noise_kind,level,seed,rmse_bpm,pct_within_3bpm,mean_abs_corr,max_abs_corr"
SUMMARY_HEADER = "noise_kind,level,rmse_bpm,pct_within_3bpm,mean_abs_corr,max_abs_corr"


@dataclass(frozen=True)
class SweepSpec:
    noise_kind: str
    levels: tuple[float, ...]
    runs_per_level: int = 3
    base: SimConfig = field(default_factory=SimConfig)

    def __post_init__(self) -> None:
        if self.noise_kind not in NOISE_KINDS:
            raise ValueError(f"noise_kind must be one of {NOISE_KINDS}")
        if len(self.levels) == 0:
            raise ValueError("levels must be nonempty")
        if self.runs_per_level < 1:
            raise ValueError("runs_per_level must be >= 1")


@dataclass(frozen=True)
class RunRecord:
    noise_kind: str
    level: float
    seed: int
    rmse_bpm: float
    pct_within_3bpm: float
    mean_abs_corr: float
    max_abs_corr: float
    error: str | None = None


@dataclass(frozen=True)
class LevelSummary:
    noise_kind: str
    level: float
    rmse_bpm: float
    pct_within_3bpm: float
    mean_abs_corr: float
    max_abs_corr: float


@dataclass(frozen=True)
class MetricReport:
    rows: tuple[RunRecord, ...]
    summary: tuple[LevelSummary, ...]


def config_for_level(base: SimConfig, noise_kind: str, level: float, seed: int) -> SimConfig:
    """Bind one sweep cell to a concrete simulation config.

    Phase noise has no level; any nonzero value switches it on.
    """
    if noise_kind == "thermal":
        noise = NoiseConfig(thermal_std=level)
    elif noise_kind == "multiplicative":
        noise = NoiseConfig(mult_std=level)
    else:
        noise = NoiseConfig(phase_noise=bool(level))
    return replace(base, noise=noise, seed=seed)


def run_cell(
    base: SimConfig,
    noise_kind: str,
    level: float,
    seed: int,
    params: PipelineParams,
) -> RunRecord:
    """Simulate one (level, seed) cell and score both stages.

    Metrics are taken only at time steps where an estimate exists: from the
    end of the first window for the rate, over the trailing waveform window
    for the correlation.
    """
    config = config_for_level(base, noise_kind, level, seed)
    try:
        sim = simulate(config)
        result = run_pipeline(sim.csi, params)
        truth_bpm = sim.truth.bpm[result.sample_indices]
        rmse = metrics.rmse_bpm(result.sample_bpm, truth_bpm)
        pct = metrics.pct_within(result.sample_bpm, truth_bpm, tol_bpm=3.0)
        truth_wave = sim.truth.displacement[result.wave_start :]
        corr = metrics.sliding_abs_corr(
            truth_wave, result.waveform.displacement, params.wave_len
        )
        return RunRecord(
            noise_kind=noise_kind,
            level=level,
            seed=seed,
            rmse_bpm=rmse,
            pct_within_3bpm=pct,
            mean_abs_corr=float(np.nanmean(corr)) if np.any(np.isfinite(corr)) else float("nan"),
            max_abs_corr=float(np.nanmax(corr)) if np.any(np.isfinite(corr)) else float("nan"),
        )
    except Exception as exc:  # recorded per row, sweep continues
        return RunRecord(
            noise_kind=noise_kind,
            level=level,
            seed=seed,
            rmse_bpm=float("nan"),
            pct_within_3bpm=float("nan"),
            mean_abs_corr=float("nan"),
            max_abs_corr=float("nan"),
            error=f"{type(exc).__name__}: {exc}",
        )


def _cells(spec: SweepSpec, params: PipelineParams):
    for level in spec.levels:
        for run in range(spec.runs_per_level):
            yield (spec.base, spec.noise_kind, level, spec.base.seed + run, params)


def _summarise(rows: list[RunRecord]) -> tuple[LevelSummary, ...]:
    seen: list[tuple[str, float]] = []
    for row in rows:
        key = (row.noise_kind, row.level)
        if key not in seen:
            seen.append(key)
    out = []
    for kind, level in seen:
        cell = [r for r in rows if (r.noise_kind, r.level) == (kind, level)]
        def agg(values):
            values = np.array(values, dtype=np.float64)
            return float(np.nanmean(values)) if np.any(np.isfinite(values)) else float("nan")
        out.append(
            LevelSummary(
                noise_kind=kind,
                level=level,
                rmse_bpm=agg([r.rmse_bpm for r in cell]),
                pct_within_3bpm=agg([r.pct_within_3bpm for r in cell]),
                mean_abs_corr=agg([r.mean_abs_corr for r in cell]),
                max_abs_corr=agg([r.max_abs_corr for r in cell]),
            )
        )
    return tuple(out)


def run_sweeps(
    specs: list[SweepSpec],
    params: PipelineParams | None = None,
    jobs: int = 1,
) -> MetricReport:
    """Run every cell of every spec; row order is deterministic.

    ``jobs > 1`` distributes cells over processes; results are collected in
    submission order so the report does not depend on the worker count.
    """
    if params is None:
        params = PipelineParams()
    cells = [cell for spec in specs for cell in _cells(spec, params)]
    if jobs <= 1:
        rows = [run_cell(*cell) for cell in cells]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(run_cell, *cell) for cell in cells]
            rows = [f.result() for f in futures]
    return MetricReport(rows=tuple(rows), summary=_summarise(rows))


def run_sweep(spec: SweepSpec, params: PipelineParams | None = None, jobs: int = 1) -> MetricReport:
    return run_sweeps([spec], params, jobs)


def load_spec_data(data: dict) -> list[SweepSpec]:
    """Build sweep specs from a parsed spec file."""
    if "sweeps" not in data or not data["sweeps"]:
        raise ValueError("spec file defines no sweeps")
    base = SimConfig.from_dict(data.get("base", {}))
    runs = int(data.get("runs_per_level", 3))
    specs = []
    for section in data["sweeps"]:
        specs.append(
            SweepSpec(
                noise_kind=section["noise_kind"],
                levels=tuple(float(v) for v in section["levels"]),
                runs_per_level=runs,
                base=base,
            )
        )
    return specs


def load_spec_file(path: str | Path) -> list[SweepSpec]:
    """Load a spec from a path, or from the bundled set by bare name."""
    candidate = Path(path)
    if candidate.exists():
        text = candidate.read_text(encoding="utf-8")
    else:
        name = candidate.name if candidate.name.endswith(".spec") else f"{candidate.name}.spec"
        resource = resources.files("respmon.data").joinpath(name)
        if not resource.is_file():
            raise FileNotFoundError(f"sweep spec not found: {path}")
        text = resource.read_text(encoding="utf-8")
    return load_spec_data(json.loads(text))


def _record_fields(record) -> list[str]:
    def fmt(v: float) -> str:
        return "nan" if np.isnan(v) else format_float(v)

    return [
        fmt(record.rmse_bpm),
        fmt(record.pct_within_3bpm),
        fmt(record.mean_abs_corr),
        fmt(record.max_abs_corr),
    ]


def report_csv_text(report: MetricReport) -> str:
    """Per-run rows followed by the seed-averaged summary block."""
    lines = [REPORT_HEADER]
    for row in report.rows:
        lines.append(
            ",".join(
                [row.noise_kind, format_float(row.level), str(row.seed)]
                + _record_fields(row)
            )
        )
    lines.append("")
    lines.append("# seed-averaged summary")
    lines.append(SUMMARY_HEADER)
    for row in report.summary:
        lines.append(
            ",".join([row.noise_kind, format_float(row.level)] + _record_fields(row))
        )
    return "\n".join(lines) + "\n"


def summary_json(report: MetricReport) -> dict:
    """Machine-readable mirror: one section per (metric, noise kind)."""
    sections: dict[str, dict] = {"rate_rmse_bpm": {}, "waveform_abs_corr": {}}
    for row in report.summary:
        sections["rate_rmse_bpm"].setdefault(row.noise_kind, []).append(
            {"level": row.level, "value": row.rmse_bpm}
        )
        sections["waveform_abs_corr"].setdefault(row.noise_kind, []).append(
            {"level": row.level, "value": row.mean_abs_corr}
        )
    errors = [
        {
            "noise_kind": r.noise_kind,
            "level": r.level,
            "seed": r.seed,
            "error": r.error,
        }
        for r in report.rows
        if r.error
    ]
    return {
        "rate_rmse_bpm": sections["rate_rmse_bpm"],
        "waveform_abs_corr": sections["waveform_abs_corr"],
        "runs": [
            {
                "noise_kind": r.noise_kind,
                "level": r.level,
                "seed": r.seed,
                "rmse_bpm": r.rmse_bpm,
                "pct_within_3bpm": r.pct_within_3bpm,
                "mean_abs_corr": r.mean_abs_corr,
                "max_abs_corr": r.max_abs_corr,
            }
            for r in report.rows
        ],
        "errors": errors,
    }


def write_report(report: MetricReport, out_dir: Path) -> tuple[Path, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "report.csv"
    csv_path.write_text(report_csv_text(report), encoding="utf-8")
    json_path = out_dir / "summary.json"

    def walk(node):
        if isinstance(node, dict):
            return {k: walk(v) for k, v in node.items()}
        if isinstance(node, (list, tuple)):
            return [walk(v) for v in node]
        if isinstance(node, float) and np.isnan(node):
            return None
        return node

    json_path.write_text(
        json.dumps(walk(summary_json(report)), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    return csv_path, json_path
