import csv
import json
import os

import numpy as np
import pytest

from cinevol import classify, cli, volume


def run(*argv):
    return cli.main(list(argv))


def test_render_writes_png(tmp_path, capsys):
    out = tmp_path / "img.png"
    code = run("render", "--scene", "default", "--out", str(out),
               "--size", "64x64", "--iterations", "4")
    assert code == 0
    assert out.read_bytes()[:4] == b"\x89PNG"
    assert "iterations 4" in capsys.readouterr().out


def test_render_seed_is_deterministic(tmp_path):
    a, b = tmp_path / "a.png", tmp_path / "b.png"
    for out in (a, b):
        assert run("render", "--scene", "default", "--out", str(out),
                   "--size", "32x32", "--iterations", "2", "--seed", "7") == 0
    assert a.read_bytes() == b.read_bytes()


def test_render_logs_each_iteration(tmp_path, capsys):
    out = tmp_path / "img.png"
    assert run("render", "--scene", "default", "--out", str(out),
               "--size", "16x16", "--iterations", "300") == 0
    logged = capsys.readouterr().out
    assert "pass 300/300" in logged
    assert "iterations 300" in logged


def test_render_hdr_writes_pfm(tmp_path):
    out = tmp_path / "img.png"
    assert run("render", "--scene", "default", "--out", str(out),
               "--size", "16x16", "--iterations", "1", "--hdr") == 0
    from cinevol.pfm import load_pfm

    hdr = load_pfm(tmp_path / "img.pfm")
    assert hdr.shape == (16, 16, 3)


def test_render_missing_scene_is_ingest_error(tmp_path, capsys):
    code = run("render", "--scene", str(tmp_path / "none.json"),
               "--out", str(tmp_path / "x.png"))
    assert code == cli.EXIT_INGEST
    assert "error" in capsys.readouterr().err


def test_render_bad_size_is_render_error(tmp_path, capsys):
    code = run("render", "--scene", "default",
               "--out", str(tmp_path / "x.png"), "--size", "banana")
    assert code == cli.EXIT_RENDER


def test_sweep_background_mode(tmp_path):
    out = tmp_path / "sweep"
    code = run("sweep", "--scene", "default", "--axis", "background_mode",
               "--values", "area_only,background_only,both",
               "--out-dir", str(out), "--size", "24x24", "--iterations", "2")
    assert code == 0
    for value in ("area_only", "background_only", "both"):
        assert (out / f"background_mode_{value}.png").exists()
    assert (out / "composite.png").exists()
    with open(out / "stats.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["value", "max_lum", "mean_lum", "var_lum",
                       "overexposed_frac"]
    assert len(rows) == 4


def test_sweep_roughness_writes_three_images(tmp_path):
    out = tmp_path / "sweep"
    code = run("sweep", "--scene", "default", "--axis", "roughness",
               "--values", "0,0.5,1", "--out-dir", str(out),
               "--size", "24x24", "--iterations", "2")
    assert code == 0
    assert len([p for p in os.listdir(out)
                if p.startswith("roughness_")]) == 3


def test_sweep_light_count_overexposure(tmp_path):
    out = tmp_path / "sweep"
    code = run("sweep", "--scene", "light_count", "--axis", "light_count",
               "--values", "1,2", "--out-dir", str(out),
               "--size", "48x48", "--iterations", "8")
    assert code == 0
    with open(out / "stats.csv") as fh:
        rows = list(csv.reader(fh))[1:]
    over = {r[0]: float(r[3]) for r in rows}
    assert over["2"] >= over["1"]


def test_sweep_unknown_axis_is_usage_error(tmp_path, capsys):
    code = run("sweep", "--scene", "default", "--axis", "bananas",
               "--values", "1", "--out-dir", str(tmp_path / "s"))
    assert code == cli.EXIT_USAGE
    assert "unknown axis" in capsys.readouterr().err


def test_phantom_constant0(tmp_path):
    out = tmp_path / "out.nrrd"
    assert run("phantom", "constant0", "8", str(out)) == 0
    grid = volume.load_nrrd(out)
    assert grid.dims == (8, 8, 8)
    assert np.all(grid.values == 0.0)


def test_preset_cardiac_round_trips(tmp_path):
    out = tmp_path / "cardiac.tfcsv"
    assert run("preset", "cardiac", str(out)) == 0
    tf = classify.load_preset_csv(out.read_bytes())
    assert tf == classify.preset("cardiac")


def test_preset_unknown_name_is_usage_error(tmp_path, capsys):
    assert run("preset", "nope", str(tmp_path / "x.tfcsv")) == cli.EXIT_USAGE


def test_missing_subcommand_is_usage_error(capsys):
    assert run() == cli.EXIT_USAGE


def test_phantom_render_stats_pipeline(tmp_path):
    """End-to-end: synthesize a phantom, reference it from a scene file,
    render it, and read back summary statistics."""
    nrrd = tmp_path / "shell.nrrd"
    assert run("phantom", "sphere_shell", "32", str(nrrd)) == 0
    scene = {
        "volume": {"path": "shell.nrrd"},
        "transfer_function": {"preset": "cardiac"},
        "background": {"mode": "constant", "color": [0.4, 0.4, 0.45]},
        "camera": {"position": [15.5, 15.5, -70.0],
                   "target": [15.5, 15.5, 15.5], "vertical_fov": 40.0},
        "render": {"width": 32, "height": 32, "iterations": 2, "seed": 1},
    }
    scene_path = tmp_path / "scene.json"
    scene_path.write_text(json.dumps(scene))
    out = tmp_path / "sweep"
    code = run("sweep", "--scene", str(scene_path), "--axis",
               "background_mode", "--values", "both", "--out-dir", str(out))
    assert code == 0
    with open(out / "stats.csv") as fh:
        rows = list(csv.reader(fh))
    assert len(rows) == 2 and float(rows[1][2]) > 0.0
