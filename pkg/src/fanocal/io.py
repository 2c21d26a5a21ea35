"""
JSON and CSV formats for runs, Fano points, histograms and calibrations.

Floats are written with ``repr`` precision so every file round-trips
exactly and identical inputs give byte-identical outputs.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .calibration import CalibrationResult
from .detection import AttenuationRun
from .errors import InsufficientDataError
from .estimation import FanoPoint
from .reconstruction import ElectronHistogram

RUN_GLOB = "run_*.json"
MANIFEST_NAME = "manifest.json"


def _dump(obj, path: Path):
    path.write_text(json.dumps(obj, indent=1, sort_keys=True, allow_nan=True) + "\n")


def run_to_dict(run: AttenuationRun) -> dict:
    return {"transmittance": run.transmittance, "label": run.label,
            "samples": run.samples.tolist()}


def run_from_dict(data: dict) -> AttenuationRun:
    return AttenuationRun(float(data["transmittance"]), np.asarray(data["samples"], float),
                          data.get("label", ""))


def write_run_json(run: AttenuationRun, path) -> None:
    _dump(run_to_dict(run), Path(path))


def read_run_json(path) -> AttenuationRun:
    return run_from_dict(json.loads(Path(path).read_text()))


def write_run_csv(run: AttenuationRun, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["shot", "voltage"])
        for i, v in enumerate(run.samples.tolist()):
            writer.writerow([i, repr(v)])


def read_run_csv(path, transmittance: float, label: str = "") -> AttenuationRun:
    """Read a two-column run CSV; the transmittance is not stored in the file."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    samples = np.array([float(r["voltage"]) for r in rows])
    return AttenuationRun(transmittance, samples, label)


def run_filename(index: int, transmittance: float) -> str:
    return f"run_{index:03d}_t{transmittance:.4f}.json"


def read_dataset(directory) -> list[AttenuationRun]:
    """Load every run file in a dataset directory, ordered by transmittance.

    The manifest is deliberately not read.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise InsufficientDataError(f"dataset directory {directory} does not exist")
    runs = [read_run_json(p) for p in sorted(directory.glob(RUN_GLOB))]
    if not runs:
        raise InsufficientDataError(f"no run files matching {RUN_GLOB} in {directory}")
    return sorted(runs, key=lambda r: (r.transmittance, r.label))


def write_manifest(path, payload: dict) -> None:
    _dump(payload, Path(path))


FANO_COLUMNS = ["transmittance", "vbar", "se_vbar", "fv", "se_fv", "count"]


def write_fano_csv(points: Iterable[FanoPoint], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(FANO_COLUMNS)
        for p in points:
            writer.writerow([repr(float(p.transmittance)), repr(p.vbar), repr(p.se_vbar),
                             repr(p.fv), repr(p.se_fv), p.count])


def read_fano_csv(path) -> list[FanoPoint]:
    with open(path, newline="") as fh:
        return [FanoPoint(vbar=float(r["vbar"]), fv=float(r["fv"]),
                          se_vbar=float(r["se_vbar"]), se_fv=float(r["se_fv"]),
                          count=int(r["count"]), transmittance=float(r["transmittance"]))
                for r in csv.DictReader(fh)]


def write_histogram_csv(hist: ElectronHistogram, theory: Sequence[float], path) -> None:
    """Columns m, count, probability, theory_probability.

    Rows run over the longer of the histogram and the theory support.
    """
    theory = np.asarray(theory, dtype=float)
    size = max(hist.counts.size, theory.size)
    probs = hist.probabilities
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["m", "count", "probability", "theory_probability"])
        for m in range(size):
            c = int(hist.counts[m]) if m < hist.counts.size else 0
            p = float(probs[m]) if m < probs.size else 0.0
            q = float(theory[m]) if m < theory.size else 0.0
            writer.writerow([m, c, repr(p), repr(q)])


def write_calibration_json(result: CalibrationResult, path) -> None:
    _dump(result.to_dict(), Path(path))


def read_calibration_json(path) -> CalibrationResult:
    return CalibrationResult.from_dict(json.loads(Path(path).read_text()))
