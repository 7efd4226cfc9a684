import csv
import json
import math
import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from dmqrg import results_io as rio
from dmqrg.block_rg import Couplings, flow
from dmqrg.cli import main, parse_number
from dmqrg.scaling import scaling_analysis, singularity_surface, sweep

SQ2 = math.sqrt(2.0)


def run_cli(argv, capsys):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def csv_rows(text):
    return list(csv.DictReader(text.splitlines()))


def test_sweep_row_count(capsys):
    code, out, _ = run_cli(
        ["sweep", "--axis", "delta", "--min", 0, "--max", 6, "--points", 121, "--d", "1.0", "--steps", 0,
         "--observable", "c13", "--workers", 1], capsys)
    assert code == 0
    rows = csv_rows(out)
    assert len(rows) == 121
    assert float(rows[0]["value"]) == pytest.approx(0.5, abs=1e-12)
    assert {r["D0"] for r in rows} == {"1.0"}


def test_sweep_multiple_series(capsys):
    code, out, _ = run_cli(
        ["sweep", "--axis", "d", "--min", 0, "--max", 2, "--points", 11, "--delta", "sqrt(2)", "--steps", "0,4",
         "--workers", 1], capsys)
    assert code == 0
    rows = csv_rows(out)
    assert len(rows) == 22
    assert {r["n_steps"] for r in rows} == {"0", "4"}
    assert {float(r["delta0"]) for r in rows} == {SQ2}


def test_scaling_json(capsys, tmp_path):
    out_path = tmp_path / "scaling.json"
    code, out, _ = run_cli(["scaling", "--delta", "1.4142135", "--steps", "2:7", "-o", out_path], capsys)
    assert code == 0 and out == ""
    doc = json.loads(out_path.read_text())
    assert set(doc) >= {"delta", "d_c", "points", "position_fit", "divergence_fit"}
    assert [p["n"] for p in doc["points"]] == [2, 3, 4, 5, 6, 7]
    for key in ("position_fit", "divergence_fit"):
        assert set(doc[key]) >= {"slope", "intercept", "r2", "nu"}


def test_flow_csv(capsys):
    code, out, _ = run_cli(["flow", "--delta", 1.2, "--d", 1.0, "--steps", 20], capsys)
    assert code == 0
    rows = csv_rows(out)
    assert len(rows) == 21
    assert {r["D"] for r in rows} == {"1.0"}
    assert [int(r["n"]) for r in rows] == list(range(21))


def test_oracle_json(capsys):
    code, out, _ = run_cli(["oracle", "--sites", 3, "--delta", 0, "--d", 2], capsys)
    assert code == 0
    doc = json.loads(out)
    c13 = [p for p in doc["pairs"] if p["sites"] == [1, 3]][0]
    assert c13["gauge_value"] == pytest.approx(0.5, abs=1e-9)
    assert doc["degeneracy"] == 2


def test_oracle_ambiguous_ground_space_exit_3(capsys):
    code, out, err = run_cli(["oracle", "--sites", 3, "--delta", 0, "--d", 0, "--boundary", "periodic"], capsys)
    assert code == 3
    assert out == ""
    assert "AmbiguousGroundSpace" in err


def test_fit_failure_during_run_exit_3(capsys, monkeypatch):
    import dmqrg.scaling

    def boom(*a, **k):
        raise ValueError("minimum lies past the critical point")

    monkeypatch.setattr(dmqrg.scaling, "scaling_analysis", boom)
    code, out, err = run_cli(["scaling", "--steps", "2:4"], capsys)
    assert code == 3
    assert out == ""
    assert "ValueError" in err


@pytest.mark.parametrize(
    "argv",
    [
        ["flow", "--delta", "-1", "--d", "0", "--steps", "3"],
        ["flow", "--delta", "1", "--d", "-0.5", "--steps", "3"],
        ["flow", "--delta", "1", "--d", "0", "--steps", "999"],
        ["sweep", "--axis", "delta", "--min", "2", "--max", "1", "--points", "5"],
        ["sweep", "--axis", "delta", "--min", "0", "--max", "1", "--points", "0"],
        ["sweep", "--axis", "delta", "--min", "0", "--max", "1", "--points", "5", "--observable", "negativity"],
        ["scaling", "--delta", "0.8"],
        ["scaling", "--steps", "2:3"],
        ["surface", "--delta-min", "-1"],
        ["oracle", "--sites", "20", "--delta", "1", "--d", "0"],
        ["oracle", "--sites", "3", "--delta", "1", "--d", "0", "--pairs", "1,5"],
        ["flow", "--delta", "__import__('os')", "--d", "0", "--steps", "3"],
        ["bogus"],
    ],
)
def test_invalid_config_exit_2_without_output(argv, tmp_path, capsys):
    target = tmp_path / "out.csv"
    t0 = time.perf_counter()
    code, out, _ = run_cli(argv + ["-o", str(target)] if argv != ["bogus"] else argv, capsys)
    assert time.perf_counter() - t0 < 0.1
    assert code == 2
    assert out == ""
    assert not target.exists()
    assert list(tmp_path.iterdir()) == []


def test_missing_output_directory(tmp_path, capsys):
    code, _, _ = run_cli(["flow", "--delta", 1, "--d", 0, "--steps", 2, "-o", tmp_path / "nope" / "f.csv"], capsys)
    assert code == 2


def test_parse_number():
    assert parse_number("sqrt(2)") == SQ2
    assert parse_number("sqrt(1+0.5**2)") == math.sqrt(1.25)
    assert parse_number("1e-3") == 1e-3
    assert parse_number("-2*pi") == -2 * math.pi
    for bad in ("__import__('os')", "os.system", "2 +", "inf", "1/0", "sqrt(-1)", "True"):
        with pytest.raises(Exception):
            parse_number(bad)


def test_workers_env_gives_identical_bytes(tmp_path):
    args = [sys.executable, "-m", "dmqrg", "sweep", "--axis", "d", "--min", "0.5", "--max", "1.5",
            "--points", "33", "--delta", "sqrt(2)", "--steps", "6", "--observable", "dC13_dDelta"]
    outs = []
    for w in ("1", "2"):
        env = dict(os.environ, DMQRG_WORKERS=w)
        res = subprocess.run(args, env=env, capture_output=True, check=True)
        outs.append(res.stdout)
    assert outs[0] == outs[1]
    assert len(outs[0].splitlines()) == 34


def test_bad_workers_env(capsys, monkeypatch):
    monkeypatch.setenv("DMQRG_WORKERS", "lots")
    code, _, _ = run_cli(["flow", "--delta", 1, "--d", 0, "--steps", 2], capsys)
    assert code == 2


def test_output_is_lf_and_atomic(tmp_path, capsys):
    target = tmp_path / "flow.csv"
    target.write_text("old contents")
    assert run_cli(["flow", "--delta", 1.5, "--d", 0.3, "--steps", 4, "-o", target], capsys)[0] == 0
    data = target.read_bytes()
    assert b"\r" not in data and data.endswith(b"\n")
    assert data.startswith(b"n,N_eff,J,delta,D,saturated\n")
    assert [p.name for p in tmp_path.iterdir()] == ["flow.csv"]


# round trips ------------------------------------------------------------


def _sweeps():
    grid = np.linspace(0.0, 2.0, 9)
    a = sweep(Couplings(Delta=SQ2), "D", grid, 3, "C13")
    b = sweep(Couplings(D=0.7), "Delta", grid + 0.1, 5, "dC13_dDelta")
    return [a, b]


def _same_sweep(x, y):
    assert x.axis == y.axis and x.observable == y.observable and x.n_steps == y.n_steps
    assert x.grid.tobytes() == y.grid.tobytes()
    assert np.array_equal(x.values, y.values, equal_nan=True)
    assert x.fixed_params == y.fixed_params


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_sweep_round_trip(tmp_path, fmt):
    results = _sweeps()
    path = tmp_path / f"s.{fmt}"
    text = rio.sweeps_to_csv(results) if fmt == "csv" else rio.sweeps_to_json(results)
    path.write_text(text)
    back = rio.read_sweeps(path)
    assert len(back) == 2
    for x, y in zip(results, back):
        _same_sweep(x, y)
    again = rio.sweeps_to_csv(back) if fmt == "csv" else rio.sweeps_to_json(back)
    assert again == text


def test_sweep_csv_concatenation(tmp_path):
    a, b = _sweeps()
    path = tmp_path / "cat.csv"
    path.write_text(rio.sweeps_to_csv([a]) + rio.sweeps_to_csv([b]))
    back = rio.read_sweeps(path)
    _same_sweep(a, back[0])
    _same_sweep(b, back[1])


def test_sweep_nan_round_trip(tmp_path):
    res = sweep(Couplings(D=0.0), "Delta", [1.2, 2.0], 2, "C13")
    res.values[1] = np.nan
    path = tmp_path / "nan.json"
    path.write_text(rio.sweeps_to_json([res]))
    back = rio.read_sweeps(path)[0]
    assert math.isnan(back.values[1]) and back.values[0] == res.values[0]


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_flow_round_trip(tmp_path, fmt):
    tr = flow(Couplings(J=0.7, Delta=1.3, D=0.4), 30)
    path = tmp_path / f"f.{fmt}"
    text = rio.flow_to_csv(tr) if fmt == "csv" else rio.flow_to_json(tr)
    path.write_text(text)
    back = rio.read_flow(path)
    assert back.steps == tr.steps and back.saturated == tr.saturated


def test_scaling_round_trip(tmp_path):
    rep = scaling_analysis(SQ2, range(2, 6))
    path = tmp_path / "sc.json"
    text = rio.scaling_to_json(rep)
    path.write_text(text)
    back = rio.read_scaling(path)
    assert back.points == rep.points
    assert back.position_fit == rep.position_fit
    assert back.divergence_fit == rep.divergence_fit
    assert rio.scaling_to_json(back) == text


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_surface_round_trip(tmp_path, fmt):
    s = singularity_surface([1.0, 1.3, 1.9, 2.2], [0.0, 0.5, 1.1], 3)
    path = tmp_path / f"sf.{fmt}"
    text = rio.surface_to_csv(s) if fmt == "csv" else rio.surface_to_json(s)
    path.write_text(text)
    back = rio.read_surface(path)
    assert np.array_equal(back.values, s.values, equal_nan=True)
    assert back.delta_grid.tobytes() == s.delta_grid.tobytes()
    assert back.d_grid.tobytes() == s.d_grid.tobytes()


@pytest.mark.parametrize("kind", ["sweep", "flow", "scaling", "surface"])
def test_malformed_result_file_exit_2(tmp_path, capsys, kind):
    bad = tmp_path / "bad.csv"
    bad.write_text("this,is,not\n1,2,3\n")
    code, _, err = run_cli(["plot", bad, "--kind", kind], capsys)
    assert code == 2
    assert "MalformedResultFile" in err
    assert not (tmp_path / "bad_plot.py").exists()


def test_plot_missing_file_exit_2(tmp_path, capsys):
    code, _, _ = run_cli(["plot", tmp_path / "none.csv", "--kind", "flow"], capsys)
    assert code == 2


# plot scripts -------------------------------------------------------------


def _make(kind, tmp_path, capsys):
    if kind == "sweep":
        path = tmp_path / "c13_vs_delta.csv"
        argv = ["sweep", "--axis", "delta", "--min", 0, "--max", 6, "--points", 31, "--d", "0,1,2"]
    elif kind == "flow":
        path = tmp_path / "flow.json"
        argv = ["flow", "--delta", 1.2, "--d", 1.0, "--steps", 10]
    elif kind == "scaling":
        path = tmp_path / "scaling.json"
        argv = ["scaling", "--steps", "2:5", "--coarse-points", 201]
    else:
        path = tmp_path / "surface.csv"
        argv = ["surface", "--delta-points", 8, "--d-points", 6, "--steps", 3]
    assert run_cli(argv + ["--workers", 1, "-o", path], capsys)[0] == 0
    return path


@pytest.mark.parametrize("kind", ["sweep", "flow", "scaling", "surface"])
def test_plot_script_runs_and_references_data(tmp_path, capsys, kind):
    pytest.importorskip("matplotlib")
    data = _make(kind, tmp_path, capsys)
    code, out, _ = run_cli(["plot", data, "--kind", kind], capsys)
    assert code == 0
    script = Path(out.strip())
    assert script == data.with_name(data.stem + "_plot.py")
    text = script.read_text()
    assert repr(data.name) in text
    assert str(tmp_path) not in text
    # no data values are embedded in the script
    body = data.read_text()
    if kind == "sweep":
        sample = csv_rows(body)[5]["value"]
        assert sample not in text
    env = dict(os.environ, MPLBACKEND="Agg")
    subprocess.run([sys.executable, script.name], cwd=tmp_path, env=env, check=True, capture_output=True)
    assert data.with_suffix(".png").exists()


def test_plot_script_follows_moved_data(tmp_path, capsys):
    pytest.importorskip("matplotlib")
    data = _make("flow", tmp_path, capsys)
    run_cli(["plot", data, "--kind", "flow"], capsys)
    moved = tmp_path / "moved"
    moved.mkdir()
    for p in (data, data.with_name("flow_plot.py")):
        p.rename(moved / p.name)
    env = dict(os.environ, MPLBACKEND="Agg")
    subprocess.run([sys.executable, "flow_plot.py"], cwd=tmp_path, env=env, check=False, capture_output=True)
    subprocess.run([sys.executable, str(moved / "flow_plot.py")], env=env, check=True, capture_output=True)
    assert (moved / "flow.png").exists()
