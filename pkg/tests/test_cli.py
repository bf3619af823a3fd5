import csv
import json
import math
import shutil
import subprocess
import sys

import pytest

from isochrone.cli import EXIT_MODEL, EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE, run
from isochrone.report import csv_from_json


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def test_period_map_example(tmp_path, capsys):
    out = tmp_path / "pm.csv"
    code = run(["period-map", "--model", "plasma", "--d", "4", "--h", "0.05:0.3:6",
                "--out", str(out)])
    assert code == EXIT_OK
    rows = read_csv(out)
    assert rows[0] == ["h", "T", "return_error"]
    assert len(rows) == 7
    for row in rows[1:]:
        assert abs(float(row[1]) - 2 * math.pi) <= 1e-6
    assert "verdict=isochronous" in capsys.readouterr().out
    assert (tmp_path / "pm.run.json").exists()


def test_blowup_example(tmp_path):
    out = tmp_path / "b.json"
    assert run(["blowup", "--model", "hopf", "--y0", "1", "--out", str(out)]) == EXIT_OK
    res = read_json(out)["results"]
    assert {"blown", "t_star", "q_min", "horizon"} <= set(res)
    assert res["blown"] is True
    assert res["t_star"] == pytest.approx(3 * math.pi / 4, abs=1e-8)


def test_sabatini_example(tmp_path, capsys):
    out = tmp_path / "s.json"
    assert run(["sabatini", "--model", "plasma", "--d", "5", "--z", "1",
                "--out", str(out)]) == EXIT_OK
    res = read_json(out)["results"]
    assert res["tau"] == pytest.approx(4 / 9, abs=1e-12)
    assert res["verdict"] == "not_isochronous"
    # the half-normalized form shares the sign and the zero set
    assert res["tau_half_normalization"] == pytest.approx(2.0, abs=1e-12)
    assert "verdict=not_isochronous" in capsys.readouterr().out


def test_console_script_exit_code(tmp_path):
    exe = shutil.which("isochrone")
    cmd = [exe] if exe else [sys.executable, "-m", "isochrone.cli"]
    proc = subprocess.run(cmd + ["sabatini", "--model", "plasma", "--d", "2"],
                          capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0
    assert "tau(1)=-0.2222222222" in proc.stdout


@pytest.mark.parametrize("argv, code", [
    ([], EXIT_USAGE),
    (["frobnicate"], EXIT_USAGE),
    (["sabatini"], EXIT_USAGE),
    (["sabatini", "--model", "plasma", "--d", "x"], EXIT_USAGE),
    (["period-map", "--model", "plasma", "--h", "0.1:0.2"], EXIT_USAGE),
    (["sabatini", "--model", "plasma", "--out", "x.txt"], EXIT_USAGE),
    (["sabatini", "--model", "plasma", "--d", "0"], EXIT_MODEL),
    (["sabatini", "--model", "warp"], EXIT_MODEL),
    (["sabatini", "--model", "hopf"], EXIT_MODEL),
    (["simulate", "--model", "plasma", "--max-steps", "3", "--t-max", "50"], EXIT_NUMERICAL),
    (["period-map", "--model", "plasma", "--h", "0.2", "--t-max", "2"], EXIT_OK),
    (["monodromy", "--model", "plasma", "--t-max", "2"], EXIT_NUMERICAL),
])
def test_exit_codes(argv, code, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert run(argv) == code


def test_unwritable_output_is_numerical_exit(tmp_path):
    out = tmp_path / "missing" / "s.json"
    assert run(["sabatini", "--model", "plasma", "--out", str(out)]) == EXIT_NUMERICAL


@pytest.mark.parametrize("argv", [
    ["sabatini", "--model", "plasma", "--d", "3", "--z", "0.1:1:10"],
    ["simulate", "--model", "relativistic", "--h", "0.7", "--t-max", "3", "--samples", "7"],
    ["monodromy", "--model", "plasma", "--d", "2"],
    ["blowup", "--model", "hopf", "--y0", "-0.5"],
    ["field", "--model", "plasma", "--d", "1", "--nx", "5", "--t", "0:2:3"],
    ["involution", "--a", "0.3"],
])
def test_json_regenerates_csv(argv, tmp_path):
    js, cs = tmp_path / "r.json", tmp_path / "r.csv"
    assert run(argv + ["--out", str(js), "--out", str(cs)]) == EXIT_OK
    assert csv_from_json(read_json(js)) == cs.read_text()


def test_outputs_are_deterministic(tmp_path):
    argv = ["field", "--model", "plasma", "--d", "2", "--nx", "6", "--t", "0:4:5"]
    runs = []
    for k in range(2):
        d = tmp_path / f"run{k}"
        d.mkdir()
        paths = [d / "f.json", d / "f.csv", d / "f.svg"]
        assert run(argv + sum((["--out", str(p)] for p in paths), [])) == EXIT_OK
        runs.append([p.read_bytes() for p in paths])
    assert runs[0] == runs[1]
    meta = read_json(tmp_path / "run0" / "f.run.json")
    assert "started" in meta and meta["argv"][0] == "field"


def test_fan_svg_has_one_line_per_characteristic(tmp_path):
    out = tmp_path / "fan.svg"
    assert run(["field", "--model", "plasma", "--nx", "7", "--t", "0:3:4",
                "--out", str(out)]) == EXIT_OK
    text = out.read_text()
    for i in range(7):
        assert f'id="characteristic-{i}"' in text
    assert 'id="characteristic-7"' not in text
    assert "<image" not in text


def test_json_schema(tmp_path):
    out = tmp_path / "m.json"
    assert run(["monodromy", "--model", "plasma", "--d", "1", "--out", str(out)]) == EXIT_OK
    obj = read_json(out)
    assert obj["schema_version"] == "1"
    assert obj["analysis"] == "monodromy"
    assert obj["model"]["d"] == 1
    assert obj["columns"] == ["index", "re", "im", "modulus"]
    assert obj["results"]["dev_identity"] <= 1e-6
    assert obj["config"]["rtol"] == 1e-10


def test_config_file(tmp_path):
    cfg = tmp_path / "run.ini"
    out = tmp_path / "pm.json"
    cfg.write_text("[analysis]\ncommand = period-map\n\n[model]\nmodel = plasma\nd = 1\n\n"
                   "[initial]\nh = 0.1:0.2:2\n\n[integrator]\nrtol = 1e-9\n\n"
                   f"[output]\nout = {out}\n")
    assert run(["--config", str(cfg)]) == EXIT_OK
    obj = read_json(out)
    assert obj["config"]["rtol"] == 1e-9
    assert len(obj["data"]) == 2
    # command-line values win over the file
    assert run(["--config", str(cfg), "--rtol", "1e-10"]) == EXIT_OK
    assert read_json(out)["config"]["rtol"] == 1e-10


def test_config_rejects_unknown_keys(tmp_path):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[model]\nmodel = plasma\ncolour = blue\n")
    assert run(["sabatini", "--config", str(cfg)]) == EXIT_USAGE
    assert run(["sabatini", "--config", str(tmp_path / "none.ini")]) == EXIT_USAGE


def test_crossing_command_on_hopf(tmp_path):
    out, svg = tmp_path / "c.json", tmp_path / "c.svg"
    assert run(["crossing", "--model", "hopf", "--profile", "constant", "--amplitude", "0",
                "--t-max", "5", "--nx", "5", "--history", "11", "--out", str(out),
                "--out", str(svg)]) == EXIT_OK
    res = read_json(out)["results"]
    # zero data: every characteristic is x0 cos t, so all of them meet at pi/2
    assert res["found"] is True
    assert res["t_cross"] == pytest.approx(math.pi / 2, abs=1e-8)
    assert res["t_q_zero"] == pytest.approx(math.pi / 2, abs=1e-8)
    assert res["agree"] is True
    assert svg.stat().st_size > 0
