import json
import shutil

import pytest

from twocolor import cli
from twocolor.materials import DEFAULT_DATA_DIR
from twocolor.provenance import read_csv_rows


def run(argv, capsys):
    code = cli.run(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_materials_validate(capsys):
    code, out, _ = run(["materials", "validate"], capsys)
    assert code == 0
    assert "foctek" in out and "pass" in out and "n/a" in out


def test_design_json(capsys):
    code, out, _ = run(["design", "--signal", "894.3", "--idler", "1313.1", "--source", "foctek", "--json"], capsys)
    row = json.loads(out)
    assert code == 0
    assert row["length_mm"] == pytest.approx(138.7, rel=0.03)


def test_retuning_gives_new_length(capsys):
    _, a, _ = run(["design", "--signal", "894.3", "--idler", "1313.1", "--json"], capsys)
    _, b, _ = run(["design", "--signal", "980", "--json"], capsys)
    a, b = json.loads(a), json.loads(b)
    assert b["idler_nm"] == pytest.approx(1 / (1 / 532 - 1 / 980), abs=1e-3)
    assert a["length_mm"] != b["length_mm"]


def test_usage_errors_exit_2(capsys):
    assert run(["design", "--frobnicate"], capsys)[0] == 2
    assert run(["nonsense"], capsys)[0] == 2
    assert run(["simulate", "--bases", "HV,XY"], capsys)[0] == 2


def test_error_json(capsys, tmp_path):
    code, _, err = run(["--error-json", "analyze", "--in", str(tmp_path / "missing.csv")], capsys)
    assert code == 1
    assert json.loads(err)["error"] == "FileNotFoundError"


def test_point_source_design_fails_cleanly(capsys):
    code, _, err = run(["design", "--source", "zelmon"], capsys)
    assert code == 1 and "point values" in err


def test_simulate_then_analyze_identity(capsys, tmp_path):
    csv_path, rep_path = tmp_path / "s.csv", tmp_path / "r.json"
    assert run(["simulate", "--gamma", "1", "--noiseless", "--out", str(csv_path)], capsys)[0] == 0
    code, out, _ = run(["analyze", "--in", str(csv_path), "--report", str(rep_path)], capsys)
    assert code == 0 and "F = 1.000" in out
    rep = json.loads(rep_path.read_text())
    assert rep["fidelity"] == pytest.approx(1.0, abs=1e-9)
    assert rep["entangled"]
    assert set(rep["visibilities"]) == {"HV", "DA", "LR"}


def test_simulate_columns_and_provenance(capsys, tmp_path):
    path = tmp_path / "s.csv"
    run(["simulate", "--seed", "7", "--out", str(path)], capsys)
    header, rows = read_csv_rows(str(path))
    assert any(h.startswith("# seed: 7") for h in header)
    assert sum(h.startswith("# data: ") for h in header) == 8
    assert list(rows[0]) == ["basis_label", "theta_signal_deg", "theta_idler_deg", "qwp_signal", "qwp_idler",
                             "t_s", "N_ii", "N_ij", "N_ji", "N_jj", "seed"]
    assert len(rows) == 57


@pytest.mark.parametrize("argv", [
    ["simulate", "--seed", "3"],
    ["tuning-curve", "--points", "8"],
    ["phase-profile", "--length", "150", "--step", "20"],
])
def test_byte_identical_outputs(argv, capsys, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run(argv + ["--out", str(a)], capsys)
    run(argv + ["--out", str(b)], capsys)
    assert a.read_bytes() == b.read_bytes()


def test_temp_tune(capsys):
    code, out, _ = run(["temp-tune", "--slab", "30", "--json"], capsys)
    d = json.loads(out)
    assert code == 0 and 1.2 <= d["pi_shift_K"] <= 4.8


def test_reproduce_table(capsys):
    code, out, _ = run(["reproduce", "table1", "--json"], capsys)
    rows = {r["source"]: r for r in json.loads(out)}
    assert code == 0
    assert rows["foctek"]["length_mm"] == pytest.approx(138.7, rel=0.03)
    assert rows["handbook"]["length_mm"] == pytest.approx(178.8, rel=0.03)
    assert rows["zelmon"]["length_mm"] is None
    assert rows["zelmon"]["dn_signal"] == 0.211408


@pytest.mark.parametrize("target,files", [
    ("fig4", ["fig4_phase_profile.csv"]),
    ("fig5", ["fig5_tuning_curve.csv"]),
    ("fig6", ["fig6_temperature_scan.csv"]),
    ("fig7", ["fig7_hwp_sweeps.csv", "fig7_report.json"]),
])
def test_reproduce_figures(target, files, capsys, tmp_path):
    args = ["reproduce", target, "--out-dir", str(tmp_path)]
    if target == "fig4":
        args += ["--step", "10"]
    assert run(args, capsys)[0] == 0
    for f in files:
        assert (tmp_path / f).stat().st_size > 0


def test_materials_dir_override(capsys, tmp_path):
    data = tmp_path / "mat"
    shutil.copytree(DEFAULT_DATA_DIR, data)
    assert run(["--materials-dir", str(data), "materials", "validate"], capsys)[0] == 0
    empty = tmp_path / "empty"
    empty.mkdir()
    code, _, err = run(["--materials-dir", str(empty), "materials", "validate"], capsys)
    assert code == 1 and "no material files" in err
