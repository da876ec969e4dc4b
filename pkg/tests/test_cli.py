import json
import subprocess
import sys

import pytest

from spinescan.cli import main
from spinescan.imaging import read_pgm

from conftest import SHORT

BASE = {"phantom": {"scan_span": SHORT["scan_span"], "region_bounds": list(SHORT["region_bounds"])},
        "control": {}}


def config(tmp_path, extra=None, name="scenario.json"):
    data = json.loads(json.dumps(BASE))
    for section, values in (extra or {}).items():
        if isinstance(values, dict):
            data.setdefault(section, {}).update(values)
        else:
            data[section] = values
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


@pytest.fixture(scope="module")
def scan_dir(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("scan")
    out = tmp / "out"
    code = main(["scan", config(tmp), "--out", str(out), "--dump-frames"])
    return code, out


def test_scan_exit_and_artifacts(scan_dir):
    code, out = scan_dir
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    assert report["phase"] == "Done"
    assert report["gt_angle_deg"] > 0
    for key in ("mean_dev_px", "std_px", "mean_dev_mm", "std_mm", "angle_deg", "kalman", "detections"):
        assert key in report
    header = (out / "scanlog.csv").read_text().splitlines()[0]
    assert header.startswith("t,x,y,z,rx,ry,rz,fx")
    coronal = read_pgm(out / "coronal.pgm")
    assert coronal.ndim == 2 and coronal.max() > 0


def test_dump_frames(scan_dir):
    _, out = scan_dir
    frames = sorted((out / "frames").glob("*.pgm"))
    rows = (out / "scanlog.csv").read_text().splitlines()[1:]
    n = sum(1 for r in rows if r.split(",")[13] != "")
    assert len(frames) == n
    assert frames[0].name == "0000.pgm"
    assert read_pgm(frames[0]).shape == (480, 640)


def test_repeat_is_byte_identical(scan_dir, tmp_path):
    _, out = scan_dir
    again = tmp_path / "again"
    assert main(["scan", config(tmp_path), "--out", str(again)]) == 0
    assert (again / "scanlog.csv").read_bytes() == (out / "scanlog.csv").read_bytes()


def test_fcrit_below_fref_exits_2(tmp_path, capsys):
    path = config(tmp_path, {"control": {"F_crit": 10.0}})
    assert main(["scan", path, "--out", str(tmp_path / "o")]) == 2
    report = json.loads((tmp_path / "o" / "report.json").read_text())
    assert report["phase"] == "Stopped"
    assert "Stopped" in capsys.readouterr().out


def test_missing_file_exits_1(tmp_path, capsys):
    assert main(["scan", str(tmp_path / "none.json")]) == 1
    assert "not found" in capsys.readouterr().err


def test_bad_key_exits_1(tmp_path, capsys):
    assert main(["scan", config(tmp_path, {"phantom": {"vertebra_fraction": 1.5}})]) == 1
    assert "phantom.vertebra_fraction" in capsys.readouterr().err


def test_unwritable_output_exits_1(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["scan", config(tmp_path), "--out", str(blocker / "sub")]) == 1
    assert "error" in capsys.readouterr().err


def test_manual(tmp_path):
    out = tmp_path / "m"
    assert main(["manual", config(tmp_path), "--out", str(out)]) == 0
    assert json.loads((out / "report.json").read_text())["mode"] == "manual"


def test_compare(tmp_path, capsys):
    out = tmp_path / "c"
    assert main(["compare", config(tmp_path), "--out", str(out), "--jobs", "2"]) == 0
    printed = json.loads(capsys.readouterr().out)
    stored = json.loads((out / "compare.json").read_text())
    assert printed == stored
    assert set(stored) == {"robotic", "manual", "robotic_to_manual_ratio"}
    assert stored["robotic"]["mean_abs_dev_mm"] < stored["manual"]["mean_abs_dev_mm"]


def test_detector_eval(tmp_path, capsys):
    assert main(["detector-eval", config(tmp_path), "--frames", "30", "--out", str(tmp_path)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["n_frames"] == 30
    for key in ("pck", "mean_error_px", "mean_loss", "region_accuracy"):
        assert key in report
    assert json.loads((tmp_path / "detector_eval.json").read_text()) == report


def test_detector_eval_rejects_zero_frames(tmp_path):
    assert main(["detector-eval", config(tmp_path), "--frames", "0"]) == 1


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "spinescan", "detector-eval", config(tmp_path),
                           "--frames", "5"], capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0, proc.stderr
    assert json.loads(proc.stdout)["n_frames"] == 5


def test_usage_error_is_not_a_stop():
    assert main(["frobnicate"]) == 1
    assert main(["--help"]) == 0
