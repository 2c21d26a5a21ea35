import hashlib
import json

import numpy as np
import pytest

from fanocal import cli
from fanocal.calibration import calibrate
from fanocal.config import ExperimentConfig, load_config, preset
from fanocal.detection import AttenuationRun
from fanocal.errors import ConfigError
from fanocal.estimation import fano_point
from fanocal.io import (read_calibration_json, read_dataset, read_fano_csv, read_run_csv,
                        read_run_json, write_calibration_json, write_fano_csv,
                        write_histogram_csv, write_run_csv, write_run_json)
from fanocal.reconstruction import rebin

SHOTS = "3000"


def digests(directory):
    return {p.name: hashlib.sha256(p.read_bytes()).hexdigest()
            for p in sorted(directory.iterdir())}


def test_run_json_and_csv_round_trip(tmp_path):
    run = AttenuationRun(0.3, np.array([0.1, -0.02, 1 / 3, 2.5e-17]), "probe")
    write_run_json(run, tmp_path / "r.json")
    back = read_run_json(tmp_path / "r.json")
    np.testing.assert_array_equal(back.samples, run.samples)
    assert (back.transmittance, back.label) == (0.3, "probe")
    data = json.loads((tmp_path / "r.json").read_text())
    assert set(data) == {"transmittance", "label", "samples"}

    write_run_csv(run, tmp_path / "r.csv")
    assert (tmp_path / "r.csv").read_text().splitlines()[0] == "shot,voltage"
    np.testing.assert_array_equal(read_run_csv(tmp_path / "r.csv", 0.3).samples, run.samples)


def test_fano_csv_columns(tmp_path, coherent_dataset):
    points = [fano_point(r) for r in coherent_dataset[1][:3]]
    write_fano_csv(points, tmp_path / "f.csv")
    header = (tmp_path / "f.csv").read_text().splitlines()[0]
    assert header == "transmittance,vbar,se_vbar,fv,se_fv,count"
    back = read_fano_csv(tmp_path / "f.csv")
    assert [p.fv for p in back] == [p.fv for p in points]


def test_histogram_csv(tmp_path):
    hist = rebin(AttenuationRun(1.0, [0.0, 1.0, 1.0, 2.0]), 1.0)
    write_histogram_csv(hist, [0.2, 0.5, 0.2, 0.1], tmp_path / "h.csv")
    lines = (tmp_path / "h.csv").read_text().splitlines()
    assert lines[0] == "m,count,probability,theory_probability"
    assert lines[2] == "1,2,0.5,0.5"
    assert len(lines) == 5


def test_calibration_json_round_trip(tmp_path, thermal_dataset):
    result = calibrate(thermal_dataset[1])
    write_calibration_json(result, tmp_path / "c.json")
    back = read_calibration_json(tmp_path / "c.json")
    assert back.to_dict() == result.to_dict()


def test_config_validation(tmp_path):
    with pytest.raises(ConfigError):
        preset("coherent", shots_per_run=0)
    with pytest.raises(ConfigError):
        preset("coherent", transmittances=[])
    with pytest.raises(ConfigError):
        preset("coherent", transmittances=[0.5, 1.5])
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"model": {"type": "poisson", "nbar": -1},
                                    "chain": {"eta": 0.5, "alpha": 1}})
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(preset("thermal").to_dict()))
    assert load_config(path).to_dict() == preset("thermal").to_dict()


def test_simulate_shots_zero_is_config_error(tmp_path):
    assert cli.main(["simulate", "--shots", "0", "--out", str(tmp_path / "d")]) == cli.EXIT_CONFIG


def test_simulate_bad_config_file(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli.main(["simulate", "--config", str(bad), "--out", str(tmp_path / "d")]) == 2


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    rc = cli.main(["simulate", "--shots", SHOTS, "--out", str(blocker / "sub")])
    assert rc == cli.EXIT_CONFIG


def test_simulate_writes_runs_and_manifest(tmp_path):
    out = tmp_path / "d"
    assert cli.main(["simulate", "--preset", "coherent", "--shots", SHOTS, "--out", str(out)]) == 0
    runs = sorted(out.glob("run_*.json"))
    assert len(runs) == 10
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["chain"]["alpha"] == 0.358
    assert [e["file"] for e in manifest["runs"]] == [p.name for p in runs]


def test_simulate_is_byte_deterministic(tmp_path):
    args = ["simulate", "--preset", "pseudo_thermal", "--shots", SHOTS, "--seed", "7"]
    assert cli.main(args + ["--out", str(tmp_path / "a")]) == 0
    assert cli.main(args + ["--out", str(tmp_path / "b"), "--jobs", "3"]) == 0
    assert digests(tmp_path / "a") == digests(tmp_path / "b")
    assert cli.main(["simulate", "--preset", "pseudo_thermal", "--shots", SHOTS, "--seed", "8",
                     "--out", str(tmp_path / "c")]) == 0
    assert digests(tmp_path / "a") != digests(tmp_path / "c")


@pytest.mark.parametrize("name", ["coherent", "thermal", "pseudo_thermal"])
def test_round_trip_presets(tmp_path, name, capsys):
    data = tmp_path / name
    assert cli.main(["simulate", "--preset", name, "--shots", "20000", "--out", str(data)]) == 0
    assert cli.main(["calibrate", str(data)]) == 0
    report = capsys.readouterr().out
    assert "alpha" in report and "classification" in report
    assert (data / "fano_points.csv").exists()
    calib = json.loads((data / "calibration.json").read_text())
    assert calib["alpha"] > 0
    assert cli.main(["reconstruct", str(data), "--calibration", str(data / "calibration.json")]) == 0
    summary = json.loads((data / "reconstruction.json").read_text())
    assert len(summary) == 10
    assert all(s["fidelity"] >= 0.99 for s in summary)
    assert len(list(data.glob("hist_*.csv"))) == 10


def test_calibration_ignores_manifest(tmp_path):
    data = tmp_path / "d"
    assert cli.main(["simulate", "--preset", "thermal", "--shots", SHOTS, "--out", str(data)]) == 0
    assert cli.main(["calibrate", str(data), "--out", str(tmp_path / "c1")]) == 0
    manifest = json.loads((data / "manifest.json").read_text())
    manifest["config"]["chain"] = {"eta": 0.9, "alpha": 123.0, "sigma1": 9.0, "sigma_dark": 9.0}
    (data / "manifest.json").write_text(json.dumps(manifest))
    assert cli.main(["calibrate", str(data), "--out", str(tmp_path / "c2")]) == 0
    (data / "manifest.json").write_text("garbage")
    assert cli.main(["calibrate", str(data), "--out", str(tmp_path / "c3")]) == 0
    a = (tmp_path / "c1" / "calibration.json").read_bytes()
    assert a == (tmp_path / "c2" / "calibration.json").read_bytes()
    assert a == (tmp_path / "c3" / "calibration.json").read_bytes()


def test_calibrate_errors(tmp_path):
    empty = tmp_path / "empty"
    empty.mkdir()
    assert cli.main(["calibrate", str(empty)]) == cli.EXIT_DATA
    data = tmp_path / "d"
    assert cli.main(["simulate", "--shots", SHOTS, "--out", str(data)]) == 0
    for p in sorted(data.glob("run_*.json"))[2:]:
        p.unlink()
    assert cli.main(["calibrate", str(data)]) == cli.EXIT_DATA


def test_calibrate_degenerate_design_is_fit_failure(tmp_path):
    # identical samples at every transmittance: all vbar equal
    samples = np.random.default_rng(0).poisson(3, 500) * 0.3
    for i in range(3):
        write_run_json(AttenuationRun(0.5 + 0.1 * i, samples), tmp_path / f"run_{i:03d}.json")
    assert cli.main(["calibrate", str(tmp_path)]) == cli.EXIT_FIT


def test_reconstruct_errors(tmp_path):
    data = tmp_path / "d"
    assert cli.main(["simulate", "--shots", SHOTS, "--out", str(data)]) == 0
    assert cli.main(["reconstruct", str(data), "--calibration", str(tmp_path / "nope.json")]) == 3
    assert cli.main(["calibrate", str(data)]) == 0
    calib = data / "calibration.json"
    assert cli.main(["reconstruct", str(data), "--calibration", str(calib), "--run", "t=0.55"]) == 3
    assert cli.main(["reconstruct", str(data), "--calibration", str(calib), "--run", "99"]) == 3
    assert cli.main(["reconstruct", str(data), "--calibration", str(calib), "--run", "t=1.0",
                     "--fidelity-from", "1", "--out", str(tmp_path / "r")]) == 0
    summary = json.loads((tmp_path / "r" / "reconstruction.json").read_text())
    assert len(summary) == 1 and summary[0]["fidelity_from"] == 1
    bad = json.loads(calib.read_text())
    bad["alpha"] = -0.1
    (tmp_path / "bad.json").write_text(json.dumps(bad))
    assert cli.main(["reconstruct", str(data), "--calibration", str(tmp_path / "bad.json")]) == 3


def test_report_renders_figures(tmp_path):
    data = tmp_path / "d"
    assert cli.main(["simulate", "--preset", "thermal", "--shots", "5000", "--out", str(data)]) == 0
    out = tmp_path / "rep"
    assert cli.main(["report", str(data), "--model-hint", "thermal", "--bootstrap", "50",
                     "--out", str(out)]) == 0
    for name in ["fano.png", "pulse_height.png", "linearity.png", "fano_points.csv",
                 "calibration.json", "reconstruction.json", "report.txt"]:
        assert (out / name).stat().st_size > 0
    pngs = list(out.glob("hist_*.png"))
    assert len(pngs) == 10
    assert pngs[0].read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
    assert json.loads((out / "calibration.json").read_text())["model_hint"] == "thermal"


def test_cli_flags_reach_calibration(tmp_path):
    data = tmp_path / "d"
    assert cli.main(["simulate", "--shots", SHOTS, "--out", str(data)]) == 0
    assert cli.main(["calibrate", str(data), "--z-threshold", "3.5", "--bootstrap", "40",
                     "--model-hint", "coherent"]) == 0
    calib = json.loads((data / "calibration.json").read_text())
    assert calib["z_threshold"] == 3.5
    assert calib["model_hint"] == "coherent"
    assert calib["alpha_constrained"] is not None


def test_read_dataset_sorted_by_transmittance(tmp_path):
    for i, t in enumerate([0.9, 0.1, 0.5]):
        write_run_json(AttenuationRun(t, [1.0, 2.0]), tmp_path / f"run_{i:03d}.json")
    assert [r.transmittance for r in read_dataset(tmp_path)] == [0.1, 0.5, 0.9]
