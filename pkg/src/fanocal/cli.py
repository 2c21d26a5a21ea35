"""
Command-line front end.

    fanocal simulate    --preset coherent --out data/coherent
    fanocal calibrate   data/coherent --model-hint auto
    fanocal reconstruct data/coherent --calibration data/coherent/calibration.json
    fanocal report      data/coherent --out reports/coherent

Exit codes: 0 success, 2 configuration error, 3 data error, 4 fit failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import re
import sys
from pathlib import Path

from . import __version__
from .calibration import MODEL_HINTS, CalibrationResult, calibrate
from .config import PRESETS, ExperimentConfig, load_config, preset
from .detection import AttenuationRun, simulate_runs
from .errors import (ConfigError, DegenerateDesignError, DegenerateRunError, FitError,
                     InsufficientDataError, NormalizationError, ParameterDomainError)
from .estimation import DEFAULT_BOOTSTRAP_ROUNDS
from .io import (MANIFEST_NAME, read_calibration_json, read_dataset, run_filename,
                 write_calibration_json, write_fano_csv, write_histogram_csv, write_manifest,
                 write_run_json)
from .reconstruction import reconstruct_and_score

log = logging.getLogger("fanocal")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_FIT = 0, 2, 3, 4


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", text).strip("_")


def _ensure_dir(path) -> Path:
    path = Path(path)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(f"cannot create output directory {path}: {exc}", EXIT_CONFIG) from None
    return path


def build_config(args) -> ExperimentConfig:
    if args.config:
        config = load_config(args.config)
    else:
        config = preset(args.preset)
    if args.seed is not None:
        config.master_seed = int(args.seed)
    if args.shots is not None:
        data = config.to_dict()
        data["shots_per_run"] = args.shots
        config = ExperimentConfig.from_dict(data)
    return config


def simulate_dataset(config: ExperimentConfig, out_dir, jobs: int = 1) -> list[Path]:
    """Write one run file per transmittance plus a manifest."""
    out = _ensure_dir(out_dir)
    runs = simulate_runs(config.model, config.chain, config.transmittances,
                         config.shots_per_run, config.master_seed, jobs=jobs)
    written, entries = [], []
    for i, run in enumerate(runs):
        path = out / run_filename(i, run.transmittance)
        write_run_json(run, path)
        written.append(path)
        entries.append({"file": path.name, "transmittance": run.transmittance,
                        "label": run.label,
                        "sha256": hashlib.sha256(path.read_bytes()).hexdigest()})
    # ground truth kept for bookkeeping only; calibrate never opens this file
    manifest = {"fanocal_version": __version__, "config": config.to_dict(), "runs": entries}
    write_manifest(out / MANIFEST_NAME, manifest)
    written.append(out / MANIFEST_NAME)
    return written


def format_fit_report(result: CalibrationResult) -> str:
    lines = [
        f"classification : {result.classification} (z = {result.z_threshold:g}, "
        f"hint = {result.model_hint})",
        f"alpha          : {result.alpha:.5f} +/- {result.se_alpha:.5f} V",
        f"slope Q/nbar   : {result.slope:.5f} +/- {result.se_slope:.5f}",
    ]
    if result.mu is not None:
        lines.append(f"modes mu       : {result.mu:.3f} +/- {result.se_mu:.3f}")
    if result.binomial_n is not None:
        lines.append(f"binomial N     : {result.binomial_n:.2f}")
    if result.alpha_constrained is not None:
        lines.append(f"alpha (slope=0): {result.alpha_constrained:.5f} +/- "
                     f"{result.se_alpha_constrained:.5f} V")
    lines.append(f"chi2 / dof     : {result.chi2:.3f} / {result.dof}")
    lines.append(f"OLS diagnostic : slope {result.ols_slope:.5f}, intercept "
                 f"{result.ols_intercept:.5f} V")
    lines.append("")
    lines.append(f"{'t':>8} {'vbar (V)':>10} {'F_v (V)':>10} {'se F_v':>9} {'shots':>8}")
    for p in result.points:
        lines.append(f"{p.transmittance:8.4f} {p.vbar:10.5f} {p.fv:10.5f} {p.se_fv:9.5f} "
                     f"{p.count:8d}")
    lines.extend(f"warning: {w}" for w in result.warnings)
    return "\n".join(lines)


def select_runs(runs: list[AttenuationRun], selector: str) -> list[AttenuationRun]:
    """Pick runs by ``all``, position in transmittance order, ``t=VALUE`` or label."""
    if selector in ("", "all"):
        return runs
    if selector.isdigit():
        i = int(selector)
        if i < len(runs):
            return [runs[i]]
        raise CliError(f"run index {i} out of range (0..{len(runs) - 1})", EXIT_DATA)
    if selector.startswith("t="):
        try:
            t = float(selector[2:])
        except ValueError:
            raise CliError(f"bad transmittance selector {selector!r}", EXIT_CONFIG) from None
        chosen = [r for r in runs if abs(r.transmittance - t) < 1e-9]
    else:
        chosen = [r for r in runs if r.label == selector]
    if not chosen:
        raise CliError(f"selector {selector!r} matches no run", EXIT_DATA)
    return chosen


def _calibrate(args) -> tuple[list[AttenuationRun], CalibrationResult]:
    runs = read_dataset(args.dataset)
    result = calibrate(runs, model_hint=args.model_hint, z_threshold=args.z_threshold,
                       bootstrap_rounds=args.bootstrap)
    return runs, result


def _load_calibration(path) -> CalibrationResult:
    try:
        calib = read_calibration_json(path)
    except (OSError, ValueError, TypeError, KeyError) as exc:
        raise CliError(f"cannot read calibration {path}: {exc}", EXIT_DATA) from None
    if not calib.alpha > 0:
        raise CliError(f"calibration alpha {calib.alpha} is not positive; refusing", EXIT_DATA)
    return calib


def _reconstruct_all(runs, calib, out: Path, start: int, plots: bool = False):
    summary = []
    for run in runs:
        rec = reconstruct_and_score(run, calib, start=start)
        stem = _slug(run.label)
        write_histogram_csv(rec.histogram, rec.theory_pmf, out / f"hist_{stem}.csv")
        if plots:
            from .plotting import plot_reconstruction
            plot_reconstruction(rec, out / f"hist_{stem}.png",
                                title=f"{run.label}, {calib.family}")
        summary.append({"label": run.label, "transmittance": run.transmittance,
                        "fidelity": rec.fidelity, "fidelity_from": start,
                        "clamped_fraction": rec.histogram.clamped_fraction,
                        "total": rec.histogram.total, "theory": rec.params})
        print(f"{run.label:>24}  fidelity {rec.fidelity:.5f}  "
              f"mean m {rec.mean_electrons:.3f}")
    return summary


def cmd_simulate(args) -> int:
    config = build_config(args)
    out = Path(args.out) if args.out else Path(config.outputs.get("dataset", f"data/{config.name}"))
    try:
        files = simulate_dataset(config, out, jobs=args.jobs)
    except OSError as exc:
        raise CliError(f"cannot write dataset to {out}: {exc}", EXIT_CONFIG) from None
    print(f"wrote {len(files) - 1} runs and manifest to {out}")
    return EXIT_OK


def cmd_calibrate(args) -> int:
    _, result = _calibrate(args)
    out = _ensure_dir(args.out or args.dataset)
    write_calibration_json(result, out / "calibration.json")
    write_fano_csv(result.points, out / "fano_points.csv")
    print(format_fit_report(result))
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    calib = _load_calibration(args.calibration)
    runs = select_runs(read_dataset(args.dataset), args.run)
    out = _ensure_dir(args.out or args.dataset)
    summary = _reconstruct_all(runs, calib, out, args.fidelity_from)
    (out / "reconstruction.json").write_text(json.dumps(summary, indent=1, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_report(args) -> int:
    from .plotting import plot_fano_line, plot_linearity, plot_pulse_height

    runs, result = _calibrate(args)
    out = _ensure_dir(args.out or Path(args.dataset) / "report")
    write_calibration_json(result, out / "calibration.json")
    write_fano_csv(result.points, out / "fano_points.csv")
    report = format_fit_report(result)
    print(report)
    summary = _reconstruct_all(runs, result, out, args.fidelity_from, plots=True)
    (out / "reconstruction.json").write_text(json.dumps(summary, indent=1, sort_keys=True) + "\n")
    plot_fano_line(result, out / "fano.png", title=Path(args.dataset).name)
    plot_pulse_height(runs, out / "pulse_height.png")
    plot_linearity(runs, out / "linearity.png")
    fid = "\n".join(f"{s['label']:>24}  fidelity {s['fidelity']:.5f}" for s in summary)
    (out / "report.txt").write_text(report + "\n\n" + fid + "\n")
    print(f"report written to {out}")
    return EXIT_OK


def _add_analysis_flags(p):
    p.add_argument("--model-hint", choices=MODEL_HINTS, default="auto")
    p.add_argument("--z-threshold", type=float, default=2.0)
    p.add_argument("--bootstrap", type=int, default=DEFAULT_BOOTSTRAP_ROUNDS,
                   help="bootstrap resamples per Fano point")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fanocal", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate an attenuation series")
    p.add_argument("--preset", choices=sorted(PRESETS), default="coherent")
    p.add_argument("--config", help="JSON experiment config (overrides --preset)")
    p.add_argument("--seed", type=int)
    p.add_argument("--shots", type=int, help="override shots per run")
    p.add_argument("--jobs", type=int, default=1, help="runs simulated in parallel")
    p.add_argument("--out", help="dataset directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("calibrate", help="fit the Fano line of a dataset")
    p.add_argument("dataset")
    _add_analysis_flags(p)
    p.add_argument("--out", help="output directory (default: the dataset directory)")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("reconstruct", help="rebin runs into photoelectron histograms")
    p.add_argument("dataset")
    p.add_argument("--calibration", required=True, help="calibration JSON")
    p.add_argument("--run", default="all",
                   help="'all', index in transmittance order, 't=VALUE' or a run label")
    p.add_argument("--fidelity-from", type=int, choices=(0, 1), default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("report", help="calibrate, reconstruct and render figures")
    p.add_argument("dataset")
    _add_analysis_flags(p)
    p.add_argument("--fidelity-from", type=int, choices=(0, 1), default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (ConfigError, ParameterDomainError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InsufficientDataError, DegenerateRunError, NormalizationError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (DegenerateDesignError, FitError) as exc:
        print(f"fit failure: {exc}", file=sys.stderr)
        return EXIT_FIT


if __name__ == "__main__":
    sys.exit(main())
