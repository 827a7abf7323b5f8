import math

import numpy as np
import pytest

from helisurf.cli import main


def run(monkeypatch, tmp_path, argv):
    monkeypatch.chdir(tmp_path)
    return main(argv)


def test_phase_portrait_writes_figure_and_layer_csvs(monkeypatch, tmp_path):
    code = run(monkeypatch, tmp_path,
               ["phase-portrait", "--h", "t^2+1", "--grid", "64",
                "--smax", "8", "--out", "p.svg"])
    assert code == 0
    assert (tmp_path / "p.svg").exists()
    for layer in ("field", "nullcline", "markers", "orbits"):
        assert (tmp_path / f"p_{layer}.csv").exists()
    markers = (tmp_path / "p_markers.csv").read_text().splitlines()
    assert markers[0] == "kind,x,y"
    eq = [r for r in markers if r.startswith("equilibrium")]
    assert eq and float(eq[0].split(",")[1]) == pytest.approx(0.5, abs=1e-12)
    # two axis limit points +/- 1/sqrt(2)
    axis = [r for r in markers if r.startswith("axis_limit")]
    assert sorted(float(r.split(",")[2]) for r in axis) == pytest.approx(
        [-1 / math.sqrt(2), 1 / math.sqrt(2)], abs=1e-12)


def test_phase_portrait_without_nullcline_layer(monkeypatch, tmp_path):
    code = run(monkeypatch, tmp_path,
               ["phase-portrait", "--h", "t^2+1", "--eps", "-1",
                "--grid", "64", "--smax", "5", "--out", "q.svg"])
    assert code == 0
    assert (tmp_path / "q.svg").exists()
    assert not (tmp_path / "q_nullcline.csv").exists()


def test_phase_portrait_beta0_layer_and_component_count(monkeypatch, tmp_path):
    code = run(monkeypatch, tmp_path,
               ["phase-portrait", "--h", "(t-0.6)^2", "--grid", "128",
                "--smax", "5", "--out", "r.svg"])
    assert code == 0
    rows = (tmp_path / "r_nullcline.csv").read_text().splitlines()[1:]
    assert {int(r.split(",")[0]) for r in rows} == {0, 1, 2}
    beta = (tmp_path / "r_beta0.csv").read_text().splitlines()
    assert beta[0] == "t0,x,y"
    assert float(beta[1].split(",")[0]) == pytest.approx(0.6, abs=1e-9)


def test_orbit_command_classifies_and_exports(monkeypatch, tmp_path, capsys):
    code = run(monkeypatch, tmp_path,
               ["orbit", "--h", "t^2+1", "--from-axis", "--smax", "6",
                "--out", "ax.csv", "--plot"])
    out = capsys.readouterr().out
    assert code == 0
    assert "classification: AxisMeeting" in out
    assert "surface family: AxisPeriodic" in out
    assert (tmp_path / "ax.csv").exists()
    assert (tmp_path / "ax.svg").exists()
    text = (tmp_path / "ax.csv").read_text()
    assert "# event,AxisApproach" in text


def test_classify_command_prints_verdict(monkeypatch, tmp_path, capsys):
    code = run(monkeypatch, tmp_path,
               ["classify", "--h", "1", "--start", "0.45,0", "--smax", "10",
                "--tol", "1e-10"])
    out = capsys.readouterr().out
    assert code == 0
    assert "ClosedUnduloidType" in out
    assert "surface family: UnduloidFamily" in out


def test_surface_command_exports_mesh_and_glue_report(monkeypatch, tmp_path,
                                                      capsys):
    code = run(monkeypatch, tmp_path,
               ["surface", "--h", "t^2+1", "--start", "2.5,0",
                "--smax", "6", "--out", "s.obj", "--n-theta", "12",
                "--theta-range", "0,3.14159"])
    out = capsys.readouterr().out
    assert code == 0
    assert "NodoidFamily" in out
    assert "glue report" in out
    assert (tmp_path / "s.obj").exists()
    assert (tmp_path / "s.csv").exists()
    assert (tmp_path / "s_profile.csv").exists()


def test_verify_command_passes_for_even_quartic(monkeypatch, tmp_path,
                                                capsys):
    code = run(monkeypatch, tmp_path,
               ["verify", "--h", "t^2+1", "--grid", "128", "--smax", "12"])
    out = capsys.readouterr().out
    assert code == 0
    assert "FAIL" not in out
    assert "invariants hold" in out


def test_verify_warns_when_not_increasing(monkeypatch, tmp_path, capsys):
    code = run(monkeypatch, tmp_path,
               ["verify", "--h", "cos(40*t)+2", "--grid", "128",
                "--smax", "8"])
    out = capsys.readouterr().out
    assert code == 0
    assert "not nondecreasing on [0, 1]" in out


def test_config_file_with_flag_override(monkeypatch, tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# loop inside the closed region\n"
                   "h = t^2 + 1\n"
                   "c0 = 1\n"
                   "start = 0.45,0\n"
                   "smax = 10\n"
                   "tol = 1e-10\n")
    code = run(monkeypatch, tmp_path, ["classify", "--config", str(cfg)])
    assert code == 0
    assert "ClosedUnduloidType" in capsys.readouterr().out
    code = run(monkeypatch, tmp_path,
               ["classify", "--config", str(cfg), "--start", "2.5,0",
                "--smax", "8"])
    assert code == 0
    assert "NodoidType" in capsys.readouterr().out


def test_validation_failures_exit_1(monkeypatch, tmp_path, capsys):
    cases = [
        ["orbit", "--h", "t^2+1", "--c0", "0", "--from-axis"],
        ["orbit", "--h", "t^^2", "--from-axis"],
        ["verify", "--h", "t^2+1", "--grid", "10"],
        ["orbit", "--from-axis"],                        # h missing
        ["orbit", "--h", "t^2+1"],                       # no start
        ["orbit", "--h", "t^2+1", "--start", "-1,0"],
        ["surface", "--h", "t^2+1", "--start", "0.45,0",
         "--theta-range", "2,1"],
    ]
    for argv in cases:
        assert run(monkeypatch, tmp_path, argv) == 1, argv
        assert "configuration error" in capsys.readouterr().err


def test_unknown_config_key_exits_1(monkeypatch, tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("h = 1\nwibble = 3\n")
    assert run(monkeypatch, tmp_path,
               ["classify", "--config", str(cfg)]) == 1
    assert "wibble" in capsys.readouterr().err


def test_numeric_failure_exits_2(monkeypatch, tmp_path, capsys):
    # too short a horizon for any verdict
    code = run(monkeypatch, tmp_path,
               ["classify", "--h", "t", "--start", "0.6,0", "--smax", "20"])
    assert code == 2
    assert "InconclusiveOrbitError" in capsys.readouterr().err


def test_orbit_csv_written_even_when_inconclusive(monkeypatch, tmp_path):
    code = run(monkeypatch, tmp_path,
               ["orbit", "--h", "t", "--start", "0.6,0", "--smax", "20",
                "--out", "inc.csv"])
    assert code == 2
    assert (tmp_path / "inc.csv").exists()


def test_windowed_escape_exits_2(monkeypatch, tmp_path, capsys):
    code = run(monkeypatch, tmp_path,
               ["classify", "--h", "0.01", "--start", "1,0.9",
                "--smax", "500", "--xmax", "3"])
    assert code == 2
    assert "UnclassifiedSurfaceError" in capsys.readouterr().err


def test_portrait_csv_outputs_are_deterministic(monkeypatch, tmp_path):
    for sub in ("a", "b"):
        d = tmp_path / sub
        d.mkdir()
        code = run(monkeypatch, d,
                   ["phase-portrait", "--h", "t^2+1", "--grid", "64",
                    "--smax", "5", "--out", "p.svg"])
        assert code == 0
    for layer in ("field", "nullcline", "markers", "orbits"):
        fa = (tmp_path / "a" / f"p_{layer}.csv").read_bytes()
        fb = (tmp_path / "b" / f"p_{layer}.csv").read_bytes()
        assert fa == fb
    assert (tmp_path / "a" / "p.svg").read_bytes() == \
        (tmp_path / "b" / "p.svg").read_bytes()


def test_seed_flag_overrides_default_picks(monkeypatch, tmp_path):
    code = run(monkeypatch, tmp_path,
               ["phase-portrait", "--h", "t^2+1", "--grid", "64",
                "--smax", "4", "--seeds", "0.45,0", "--out", "s.svg"])
    assert code == 0
    rows = (tmp_path / "s_orbits.csv").read_text().splitlines()[1:]
    assert {int(r.split(",")[0]) for r in rows} == {0}
