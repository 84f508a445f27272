import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from qglab import cli
from qglab.solver import CertificationError


def _write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


NEUMANN = {"family": "explicit", "lengths": [math.pi], "sigmas": [0.0, 0.0]}


def test_spectrum_neumann(tmp_path):
    cfg = _write(tmp_path / "g.json", NEUMANN)
    out = tmp_path / "out"
    assert cli.main(["spectrum", "--config", cfg, "--out", str(out), "--n", "4"]) == 0
    rows = list(csv.DictReader((out / "spectrum.csv").open()))
    assert [r["n"] for r in rows] == ["1", "2", "3", "4"]
    np.testing.assert_allclose([float(r["lambda"]) for r in rows], [0, 1, 4, 9], atol=1e-11)
    doc = json.loads((out / "eigenfunctions.json").read_text())
    assert len(doc["eigenfunctions"]) == 4 and doc["graph"]["edges"][0]["length"] == pytest.approx(math.pi)
    # f_2 = sqrt(2/pi) cos t: A = sqrt(2/pi), B = 0 up to sign
    ef = doc["eigenfunctions"][1]
    assert abs(ef["A"][0]) == pytest.approx(math.sqrt(2 / math.pi), rel=1e-10) and abs(ef["B"][0]) < 1e-10


def test_spectrum_lmax(tmp_path):
    cfg = _write(tmp_path / "g.json", NEUMANN)
    assert cli.main(["spectrum", "--config", cfg, "--out", str(tmp_path), "--lmax", "30", "--oracle"]) == 0
    rows = list(csv.DictReader((tmp_path / "spectrum.csv").open()))
    assert len(rows) == 6


def test_reruns_are_byte_identical(tmp_path):
    cfg = _write(tmp_path / "g.json", {"family": "explicit", "lengths": [1.0, 2.0], "sigmas": [1.0, 0.5, 0.0]})
    for d in ("a", "b"):
        assert cli.main(["spectrum", "--config", cfg, "--out", str(tmp_path / d), "--n", "25"]) == 0
    for name in ("spectrum.csv", "eigenfunctions.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_malformed_json(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    out = tmp_path / "out"
    assert cli.main(["spectrum", "--config", str(bad), "--out", str(out)]) == 2
    assert not out.exists() or not any(out.iterdir())
    assert "malformed" in capsys.readouterr().err


def test_unknown_key(tmp_path, capsys):
    cfg = _write(tmp_path / "g.json", {**NEUMANN, "colour": "red"})
    assert cli.main(["spectrum", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "colour" in capsys.readouterr().err


def test_missing_config(tmp_path):
    assert cli.main(["spectrum", "--out", str(tmp_path)]) == 2
    assert cli.main(["spectrum", "--config", str(tmp_path / "absent.json"), "--out", str(tmp_path)]) == 4


def test_bad_option_is_config_error(tmp_path):
    cfg = _write(tmp_path / "g.json", NEUMANN)
    assert cli.main(["spectrum", "--config", cfg, "--out", str(tmp_path), "--n", "0"]) == 2


def test_unwritable_output(tmp_path):
    cfg = _write(tmp_path / "g.json", NEUMANN)
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert cli.main(["spectrum", "--config", cfg, "--out", str(blocker / "sub")]) == 4


def test_certification_failure(tmp_path, monkeypatch):
    def boom(g, opts):
        raise CertificationError("count mismatch")

    from qglab.solver.spectrum import CERTIFICATION_TALLY

    saved = dict(CERTIFICATION_TALLY)
    monkeypatch.setattr(cli, "solve", boom)
    cfg = _write(tmp_path / "g.json", NEUMANN)
    try:
        assert cli.main(["spectrum", "--config", cfg, "--out", str(tmp_path / "o")]) == 3
    finally:
        CERTIFICATION_TALLY.update(saved)
    assert not (tmp_path / "o" / "spectrum.csv").exists()


def test_presets_listing(capsys):
    assert cli.main(["presets"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 8
    assert any(line.startswith("t-modified-weyl") for line in lines)


def test_experiment_preset(tmp_path, capsys):
    assert cli.main(["experiment", "--preset", "t-weyl-interval", "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "report.json").read_text())
    assert doc["passed"] and (tmp_path / "report.csv").exists()
    assert "T-Weyl: PASS" in capsys.readouterr().out


def test_experiment_config_file(tmp_path):
    cfg = _write(tmp_path / "plan.json", {"preset": "t-gap-finite-path", "N_grid": [200, 400]})
    assert cli.main(["experiment", "--config", cfg, "--out", str(tmp_path)]) in (0, 1)
    assert json.loads((tmp_path / "report.json").read_text())["n_rows"] > 0


def test_failed_check_exit_code(tmp_path):
    cfg = _write(tmp_path / "plan.json", {"preset": "t-weyl-interval", "tol": 1e-9})
    assert cli.main(["experiment", "--config", cfg, "--out", str(tmp_path)]) == 1
    assert not json.loads((tmp_path / "report.json").read_text())["passed"]


def test_experiment_needs_one_source(tmp_path):
    cfg = _write(tmp_path / "plan.json", {"preset": "t-weyl-interval"})
    assert cli.main(["experiment", "--config", cfg, "--preset", "t-weyl-interval", "--out", str(tmp_path)]) == 2


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "qglab", "presets"], capture_output=True, text=True)
    assert r.returncode == 0 and "t-weyl-interval" in r.stdout
