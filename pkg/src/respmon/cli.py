"""Command-line front end: simulate, estimate, sweep, eval.

Exit codes: 0 success, 2 bad input, 3 I/O failure, 4 insufficient data.
No numerics live here; every command is a thin shell over the library so
that its outputs can be reproduced by direct function calls.
"""
from __future__ import annotations

import argparse
import datetime
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, dataio, metrics
from .core import InsufficientSamplesError, PipelineParams, BandLimits
from .dataio import TensorFormatError
from .pipeline import run_pipeline
from .sim import SimConfig, simulate
from .sweep import load_spec_file, run_sweeps, write_report

EXIT_OK = 0
EXIT_BAD_INPUT = 2
EXIT_IO = 3
EXIT_INSUFFICIENT = 4


def _load_json(path: str) -> dict:
    text = Path(path).read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path} is not valid JSON: {exc}") from exc


def load_params(path: str | None) -> PipelineParams:
    if path is None:
        return PipelineParams()
    data = _load_json(path)
    if "band" in data and isinstance(data["band"], dict):
        data["band"] = BandLimits(**data["band"])
    return PipelineParams(**data)


def _manifest(command: str, args: argparse.Namespace, extra: dict) -> dict:
    payload = {
        "schema_version": dataio.SCHEMA_VERSION,
        "command": command,
        "argv": sys.argv,
        "toolkit_version": __version__,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    payload.update(extra)
    return payload


def cmd_simulate(args: argparse.Namespace) -> int:
    config = SimConfig.from_dict(_load_json(args.config)) if args.config else SimConfig()
    if args.seed is not None:
        config = SimConfig.from_dict({**config.to_dict(), "seed": args.seed})
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dataio.write_manifest(
        out / "manifest.json",
        _manifest(
            "simulate",
            args,
            {
                "config": config.to_dict(),
                "outputs": ["csi.bin", "csi.meta.json", "ground_truth.csv", "config.json"],
            },
        ),
    )
    result = simulate(config)
    dataio.write_csi(out, result.csi, seed=config.seed, config=config.to_dict())
    dataio.write_ground_truth(
        out / "ground_truth.csv",
        result.truth.displacement,
        result.truth.bpm,
        config.sample_rate,
    )
    (out / "config.json").write_text(
        json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(
        f"simulated {result.csi.time_samples} samples x "
        f"{len(result.csi.link_order)} links x {result.csi.subcarriers} subcarriers "
        f"-> {out}"
    )
    return EXIT_OK


def cmd_estimate(args: argparse.Namespace) -> int:
    csi, _meta = dataio.read_csi(Path(args.csi))
    params = load_params(args.params)
    if csi.time_samples < params.wave_len:
        raise InsufficientSamplesError(
            f"estimate needs {params.wave_len} samples, tensor has {csi.time_samples}"
        )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dataio.write_manifest(
        out / "manifest.json",
        _manifest(
            "estimate",
            args,
            {
                "csi": str(args.csi),
                "params": vars(params) | {"band": vars(params.band)},
                "outputs": ["rate.csv", "waveform.csv"],
            },
        ),
    )
    result = run_pipeline(csi, params)
    dataio.write_rate_csv(
        out / "rate.csv",
        result.sample_indices,
        result.sample_bpm,
        result.sample_breath,
        params.sample_rate,
    )
    dataio.write_waveform_csv(
        out / "waveform.csv",
        result.wave_start,
        result.waveform.displacement,
        params.sample_rate,
    )
    print(
        f"rate trace over {result.trace.windows} windows, waveform from mode "
        f"{result.waveform.source_imf_index} -> {out}"
    )
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    specs = load_spec_file(args.spec)
    params = load_params(args.params)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dataio.write_manifest(
        out / "manifest.json",
        _manifest(
            "sweep",
            args,
            {
                "spec": str(args.spec),
                "jobs": args.jobs,
                "sweeps": [
                    {
                        "noise_kind": s.noise_kind,
                        "levels": list(s.levels),
                        "runs_per_level": s.runs_per_level,
                        "base": s.base.to_dict(),
                    }
                    for s in specs
                ],
                "outputs": ["report.csv", "summary.json"],
            },
        ),
    )
    report = run_sweeps(specs, params, jobs=args.jobs)
    write_report(report, out)
    failed = sum(1 for row in report.rows if row.error)
    print(f"{len(report.rows)} runs ({failed} failed) -> {out}")
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    if args.rate is None and args.waveform is None:
        raise ValueError("eval needs --rate and/or --waveform")
    params = load_params(args.params)
    truth = dataio.read_series_csv(Path(args.truth))
    truth_by_n = {int(n): i for i, n in enumerate(truth["n"])}
    lines = []
    if args.rate is not None:
        est = dataio.read_series_csv(Path(args.rate))
        rows = [truth_by_n[int(n)] for n in est["n"]]
        rmse = metrics.rmse_bpm(est["bpm_estimate"], truth["bpm"][rows])
        pct = metrics.pct_within(est["bpm_estimate"], truth["bpm"][rows], tol_bpm=3.0)
        lines.append(f"rmse_bpm={dataio.format_float(rmse)}")
        lines.append(f"pct_within_3bpm={dataio.format_float(pct)}")
    if args.waveform is not None:
        est = dataio.read_series_csv(Path(args.waveform))
        rows = [truth_by_n[int(n)] for n in est["n"]]
        window = min(params.wave_len, len(rows))
        corr = metrics.sliding_abs_corr(truth["r"][rows], est["r_estimate"], window)
        mean_corr = float(np.nanmean(corr)) if np.any(np.isfinite(corr)) else float("nan")
        max_corr = float(np.nanmax(corr)) if np.any(np.isfinite(corr)) else float("nan")
        lines.append(f"mean_abs_corr={dataio.format_float(mean_corr)}")
        lines.append(f"max_abs_corr={dataio.format_float(max_corr)}")
    text = "\n".join(lines)
    print(text)
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "metrics.txt").write_text(text + "\n", encoding="utf-8")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="respmon",
        description="Respiration monitoring from Wi-Fi channel state information",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a seeded CSI recording")
    p.add_argument("--config", help="simulation config JSON (defaults apply if omitted)")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="run both estimation stages on a tensor")
    p.add_argument("--csi", required=True, help="path to the tensor payload (.bin)")
    p.add_argument("--params", help="pipeline parameter JSON")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("sweep", help="run noise sweeps and write reports")
    p.add_argument("--spec", required=True, help="sweep spec path or bundled name (tables)")
    p.add_argument("--params", help="pipeline parameter JSON")
    p.add_argument("--jobs", type=int, default=1, help="parallel simulation cells")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("eval", help="score existing estimate files against truth")
    p.add_argument("--rate", help="rate.csv from estimate")
    p.add_argument("--waveform", help="waveform.csv from estimate")
    p.add_argument("--truth", required=True, help="ground_truth.csv from simulate")
    p.add_argument("--params", help="pipeline parameter JSON")
    p.add_argument("--out", help="optional directory for metrics.txt")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InsufficientSamplesError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INSUFFICIENT
    except (TensorFormatError, ValueError, TypeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
