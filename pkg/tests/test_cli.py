import csv

import numpy as np
import pytest

from lincs.cli import main
from lincs.config import default_config_text
from lincs.io import fmt


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_float_format_roundtrips():
    for x in (0.1, 1 / 3, np.pi, -2.5e-17, 1e300):
        assert float(fmt(x)) == x
    assert fmt(np.int64(3)) == "3"


def test_decompose(tmp_path, capsys):
    assert main(["decompose", "--matrix", "1,1,0.5,-1", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "decompose.csv")
    assert rows[0][0] == "name"
    named = {r[0]: r[1:] for r in rows[1:]}
    np.testing.assert_allclose([float(v) for v in named["H"]], [1.0, 1.0, 0.5, -1.0], atol=1e-12)
    assert float(named["residual reassembly"][0]) <= 1e-10
    assert "alpha" in capsys.readouterr().out


def test_check_conditions_exit_status(tmp_path):
    assert main(["check-conditions", "--out", str(tmp_path)]) == 0
    bad = tmp_path / "bad.yaml"
    bad.write_text(default_config_text().replace("- [1.0, 1.0, 0.5, -1.0]", "- [1.0, 0.0, 0.0, -1.0]"))
    assert main(["check-conditions", "--config", str(bad)]) == 1


def test_simulate_csv(tmp_path):
    assert main(["simulate", "--control", "0.5:0.1;0.5:-0.1", "--dt", "0.1",
                 "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "trajectory.csv")
    assert rows[0] == ["t", "g11", "g12", "g21", "g22"]
    assert float(rows[1][0]) == 0.0 and float(rows[-1][0]) == pytest.approx(1.0)
    for row in rows[1:]:
        g = np.array([float(v) for v in row[1:]]).reshape(2, 2)
        assert np.linalg.det(g) == pytest.approx(1.0, abs=1e-9)


def test_project_single(tmp_path, capsys):
    assert main(["project", "--g", "1,1,0,1", "--out", str(tmp_path)]) == 0
    assert read_csv(tmp_path / "cylinder.csv") == [["theta", "x"], ["0", "1"]]


def test_project_trajectory(tmp_path):
    assert main(["project", "--control", "1.0:0.1", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "cylinder.csv")
    assert rows[0] == ["theta", "x"]
    assert all(0 <= float(r[0]) < 2 * np.pi for r in rows[1:])


def test_reachable_csv(tmp_path):
    assert main(["reachable", "--n-points", "10", "--out", str(tmp_path), "--seed", "4"]) == 0
    rows = read_csv(tmp_path / "reachable.csv")
    assert rows[0] == ["t", "g11", "g12", "g21", "g22", "control"]
    assert len(rows) == 11
    for row in rows[1:]:
        segments = row[5].split(";")
        assert 1 <= len(segments) <= 8
        assert sum(float(s.split(":")[0]) for s in segments) == pytest.approx(float(row[0]))


def test_circle_sets_csv(tmp_path):
    assert main(["circle-sets", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "circle_sets.csv")
    assert [r[0] for r in rows[1:]] == ["D1-circle", "D-1-circle", "E2-circle", "-E2-circle"]


def test_cylinder_sets_outputs(tmp_path):
    assert main(["cylinder-sets", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "cell_sets.csv")
    assert rows[0] == ["label", "i_theta", "i_x", "theta_center", "x_center"]
    assert {r[0] for r in rows[1:]} == {"D1", "D-1", "C0", "C1"}
    svg = (tmp_path / "cylinder_sets.svg").read_text()
    assert svg.startswith("<svg") and svg.count("<circle") == 2


def test_bad_config_reports_line(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text(default_config_text().replace("rho: 0.1", "rho: 0"))
    assert main(["verify", "--config", str(bad)]) == 2
    err = capsys.readouterr().err
    assert "rho must be positive" in err and "bad.yaml:" in err


def test_verify_blocked_when_conditions_fail(tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text(default_config_text().replace("- [1.0, 1.0, 0.5, -1.0]", "- [1.0, 0.0, 0.0, -1.0]"))
    assert main(["verify", "--config", str(bad), "--out", str(tmp_path / "o")]) == 1
    rows = {r[0]: r[1] for r in read_csv(tmp_path / "o" / "verify.csv")[1:]}
    assert rows["7"] == "fail"
    for cid in ("4", "5", "6", "8", "9", "10", "11", "12"):
        assert rows[cid] == "blocked"
    assert rows["1"] == "pass"


def test_verify_coarse_grid_reports_measurement(tmp_path):
    coarse = tmp_path / "coarse.yaml"
    coarse.write_text(default_config_text().replace("n_theta: 256", "n_theta: 16")
                      .replace("n_x: 128", "n_x: 8"))
    status = main(["verify", "--config", str(coarse), "--out", str(tmp_path / "o"),
                   "--only", "9"])
    rows = read_csv(tmp_path / "o" / "verify.csv")
    assert rows[0] == ["criterion_id", "status", "measured", "threshold"]
    assert rows[1][0] == "9" and rows[1][1] in ("pass", "fail")
    assert status == (0 if rows[1][1] == "pass" else 1)
