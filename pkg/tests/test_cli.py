import csv
import json
import shutil
import subprocess
import sys
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from vortlyap.cli import main
from vortlyap.fieldio import read_field
from vortlyap.svgplot import plot_csv, render_svg

from _util import CONFIGS

SVG = "{http://www.w3.org/2000/svg}"


def _polylines(path):
    return ET.parse(path).getroot().findall(f"{SVG}polyline")


def _small_config(tmp_path, **solver):
    raw = json.loads((CONFIGS / "small_data.json").read_text())
    raw["grid"]["n"] = 16
    raw["solver"].update({"t_end": 0.2, "record_every": 5}, **solver)
    raw["output"]["dir"] = "out"
    path = tmp_path / "small.json"
    path.write_text(json.dumps(raw))
    return path


def test_field_and_norm_on_shell(tmp_path, capsys):
    f = tmp_path / "shell.vlf"
    assert main(["field", "shell", "--n", "32", "--radius", "4", "--ncomp", "1", "--out", str(f)]) == 0
    capsys.readouterr()
    assert main(["norm", str(f), "--lp", "2"]) == 0
    l2 = float(capsys.readouterr().out.split()[1])
    assert main(["norm", str(f), "--besov", "0.5,2,2"]) == 0
    label, value = capsys.readouterr().out.split()
    assert label == "B(0.5,2,2)"
    assert float(value) == pytest.approx(2 ** (0.5 * 2) * l2, rel=1e-12)
    assert main(["norm", str(f), "--qp", "2"]) == 0
    assert capsys.readouterr().out.startswith("Q2 ")


def test_field_kinds(tmp_path):
    for kind in ("random", "taylor-green"):
        f = tmp_path / f"{kind}.vlf"
        assert main(["field", kind, "--n", "16", "--seed", "3", "--out", str(f)]) == 0
        fld = read_field(f)
        assert fld.grid.n == 16


def test_decompose_writes_bands(tmp_path):
    f = tmp_path / "r.vlf"
    main(["field", "random", "--n", "16", "--seed", "1", "--out", str(f)])
    out = tmp_path / "dec"
    assert main(["decompose", str(f), "--out", str(out)]) == 0
    bands = sorted(out.glob("band_*.vlf"))
    assert bands and (out / "low.vlf").exists()
    rows = list(csv.DictReader(open(out / "band_energies.csv")))
    assert len(rows) == len(bands) + 1
    total = sum(np.asarray(read_field(b).data) for b in bands) + np.asarray(read_field(out / "low.vlf").data)
    orig = read_field(f)
    assert np.allclose(total, orig.data, atol=1e-12 * np.max(np.abs(orig.data)))
    assert (out / "partition.csv").exists()


def test_solve_then_monitors(tmp_path, capsys):
    cfg = _small_config(tmp_path)
    assert main(["solve", str(cfg)]) == 0
    out = tmp_path / "out"
    assert (out / "trajectory").is_dir()
    assert main(["monitor-lp", str(cfg), "--p", "4", "--m", "3"]) == 0
    summary = json.loads((out / "monitor_lp_p4_m3.json").read_text())
    assert summary["final_norm"] < summary["initial_norm"]
    assert set(summary["input_hashes"]) == {"config", "trajectory"}
    assert summary["config_hash"]
    assert main(["monitor-besov", str(cfg), "--s", "0.5", "--p", "2", "--q", "2"]) == 0
    assert (out / "monitor_besov_s0.5_p2_q2.csv").exists()
    assert (out / "monitor_besov_s0.5_p2_q2_bands.csv").exists()
    rows = list(csv.DictReader(open(out / "monitor_lp_p4_m3.csv")))
    norms = [float(r["norm_p"]) for r in rows]
    assert summary["strictly_decreasing"] == all(b < a for a, b in zip(norms, norms[1:]))


def test_monitor_rejects_bad_exponents(tmp_path, capsys):
    cfg = _small_config(tmp_path, t_end=0.02)
    main(["solve", str(cfg)])
    assert main(["monitor-lp", str(cfg), "--p", "1.5"]) == 1
    assert main(["monitor-besov", str(cfg), "--s", "0.5", "--p", "4", "--q", "2"]) == 1


def test_exit_codes_on_bad_input(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"solver": {"nu": -1}}))
    assert main(["solve", str(bad)]) == 1
    err = capsys.readouterr().err
    assert err.startswith("error: solver") and "nu" in err
    assert main(["solve", str(tmp_path / "missing.json")]) == 1
    assert main(["norm", str(tmp_path / "missing.vlf"), "--lp", "2"]) == 1
    # monitor before solve: no trajectory on disk
    assert main(["monitor-lp", str(_small_config(tmp_path))]) == 1


def test_numerical_abort_exit_code(tmp_path):
    cfg = _small_config(tmp_path, dt=0.5, t_end=50.0, nu=1e-4)
    raw = json.loads(cfg.read_text())
    raw["initial"]["amplitude"] = 1e4
    cfg.write_text(json.dumps(raw))
    assert main(["solve", str(cfg)]) == 2


def test_lemmas_and_dissipativity_commands(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({
        "grid": {"dim": 3, "n": 16},
        "lemmas": {"seeds": [0]},
        "dissipativity": {"samples": 2, "amplitudes": [1, 0.001], "p_list": [2]},
        "output": {"dir": "o"},
    }))
    assert main(["lemmas", str(cfg)]) == 0
    assert json.loads((tmp_path / "o" / "lemmas.json").read_text())["failed"] == 0
    assert main(["dissipativity", str(cfg)]) == 0
    rep = json.loads((tmp_path / "o" / "dissipativity.json").read_text())
    assert [e["amplitude"] for e in rep["scales"]] == [1, 0.001]
    assert "violation fraction" in capsys.readouterr().out


def test_plot_one_polyline_per_column(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("t,step,a,b,c\n0,0,1,2,3\n1,1,2,0.5,4\n2,2,3,0.25,nan\n")
    out = tmp_path / "p.svg"
    assert main(["plot", str(path), "--out", str(out)]) == 0
    lines = _polylines(out)
    assert [pl.find(f"{SVG}title").text for pl in lines] == ["a", "b", "c"]
    assert len(lines[2].get("points").split()) == 2
    assert main(["plot", str(path), "--out", str(out), "--columns", "b", "--log"]) == 0
    assert len(_polylines(out)) == 1
    assert main(["plot", str(path), "--out", str(out), "--columns", "zzz"]) == 1


def test_render_svg_edge_cases():
    with pytest.raises(ValueError):
        render_svg([0.0, 1.0], {"a": [None, None]}, "t")
    svg = render_svg([0.0, 1.0], {"flat": [2.0, 2.0]}, "t")
    assert svg.count("<polyline") == 1
    # log mode drops nonpositive samples
    svg = render_svg([0.0, 1.0, 2.0], {"x": [1.0, 0.0, 10.0]}, "t", log_y=True)
    pts = svg.split('points="')[1].split('"')[0].split()
    assert len(pts) == 2


def test_plot_csv_header_only(tmp_path):
    path = tmp_path / "e.csv"
    path.write_text("t,a\n")
    with pytest.raises(ValueError):
        plot_csv(path, tmp_path / "e.svg")


def test_console_entry_point(tmp_path):
    exe = shutil.which("vortlyap")
    cmd = [exe] if exe else [sys.executable, "-m", "vortlyap.cli"]
    res = subprocess.run(cmd + ["--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "monitor-lp" in res.stdout
