import json

import numpy as np

from rendersim.cli import run_cli


def _run(capsys, *argv):
    code = run_cli(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_print_config_is_valid_json(capsys):
    code, out, _ = _run(capsys, "print-config", "--pe-scale", "2")
    assert code == 0
    doc = json.loads(out)
    assert doc["geometry"]["cols"] == 32


def test_print_config_reads_file(tmp_path, capsys):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"geometry": {"rows": 8}}))
    code, out, _ = _run(capsys, "print-config", "--config", str(p))
    assert code == 0 and json.loads(out)["geometry"]["rows"] == 8


def test_unknown_config_key_is_usage_error(tmp_path, capsys):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"geometry": {"rowz": 8}}))
    code, _, err = _run(capsys, "print-config", "--config", str(p))
    assert code == 2 and "rowz" in err


def test_bad_flags_are_usage_errors(capsys):
    assert _run(capsys, "render")[0] == 2
    assert _run(capsys, "render", "--pipeline", "voxels")[0] == 2
    assert _run(capsys, "simulate", "--pipeline", "mlp", "--pe-scale", "3")[0] == 2
    assert _run(capsys, "frobnicate")[0] == 2


def test_gen_scene_then_render_from_it(tmp_path, capsys):
    code, out, _ = _run(capsys, "gen-scene", "--pipeline", "gaussian", "--seed", "2",
                        "--out", str(tmp_path / "s"))
    assert code == 0
    assert (tmp_path / "s" / "scene" / "manifest.json").exists()
    code, _, _ = _run(capsys, "render", "--pipeline", "gaussian", "--scene",
                      str(tmp_path / "s" / "scene"), "--oracle", "--out", str(tmp_path / "r"))
    assert code == 0
    for name in ("image.ppm", "image.pfm", "oracle.ppm", "oracle.pfm", "graph.json", "run.json"):
        assert (tmp_path / "r" / name).exists()
    manifest = json.loads((tmp_path / "r" / "run.json").read_text())
    assert manifest["command"] == "render"
    assert set(manifest["artifacts"]) == {"graph.json", "image.pfm", "image.ppm", "oracle.pfm",
                                          "oracle.ppm"}


def test_scene_kind_mismatch_is_usage_error(tmp_path, capsys):
    _run(capsys, "gen-scene", "--pipeline", "mesh", "--out", str(tmp_path / "s"))
    code, _, err = _run(capsys, "render", "--pipeline", "mlp", "--scene",
                        str(tmp_path / "s" / "scene"), "--out", str(tmp_path / "r"))
    assert code == 2 and "mesh" in err


def test_render_matches_oracle_via_compare(tmp_path, capsys):
    out = tmp_path / "r"
    assert _run(capsys, "render", "--pipeline", "hash-grid", "--oracle",
                "--no-early-termination", "--out", str(out))[0] == 0
    code, text, _ = _run(capsys, "compare", str(out / "image.pfm"), str(out / "oracle.pfm"),
                         "--tolerance", "1e-5")
    assert code == 0 and "PASS" in text


def test_compare_failure_exit_code(tmp_path, capsys):
    _run(capsys, "render", "--pipeline", "mesh", "--out", str(tmp_path / "a"))
    _run(capsys, "render", "--pipeline", "mesh", "--seed", "1", "--out", str(tmp_path / "b"))
    code, text, _ = _run(capsys, "compare", str(tmp_path / "a" / "image.ppm"),
                         str(tmp_path / "b" / "image.ppm"))
    assert code == 1 and "FAIL" in text


def test_compare_missing_file_is_usage_error(tmp_path, capsys):
    assert _run(capsys, "compare", str(tmp_path / "x.ppm"), str(tmp_path / "y.ppm"))[0] == 2


def test_simulate_outputs(tmp_path, capsys):
    code, out, _ = _run(capsys, "simulate", "--pipeline", "low-rank", "--scale", "small",
                        "--out", str(tmp_path))
    assert code == 0 and "cycles/frame" in out
    csv_text = (tmp_path / "cost.csv").read_text()
    assert csv_text.startswith("# schema: rendersim-cost/1")
    cost = json.loads((tmp_path / "cost.json").read_text())
    assert cost["energy"]["label"] == "parametric, not calibrated"
    assert json.loads((tmp_path / "config.json").read_text())["format"] == "rendersim-arch"


def test_sweep_prints_table(tmp_path, capsys):
    code, out, _ = _run(capsys, "sweep", "--scale", "small", "--out", str(tmp_path))
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("SRAM\\PE")
    assert len(lines) == 4
    assert (tmp_path / "sweep.csv").read_text().startswith("# schema: rendersim-sweep/1")


def test_validate_ok_and_failure(tmp_path, capsys):
    code, out, _ = _run(capsys, "validate", "--pipeline", "hybrid")
    assert code == 0 and out.strip() == "ok"
    _run(capsys, "gen-scene", "--pipeline", "gaussian", "--out", str(tmp_path / "s"))
    blob = tmp_path / "s" / "scene" / "gaussians_opacities.bin"
    arr = np.frombuffer(blob.read_bytes(), "<f4").copy()
    arr[0] = 2.0
    blob.write_bytes(arr.tobytes())
    code, out, _ = _run(capsys, "validate", "--pipeline", "gaussian", "--scene",
                        str(tmp_path / "s" / "scene"))
    assert code == 1 and "opacity 0" in out


def test_output_root_from_environment(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("RENDERSIM_OUT", str(tmp_path / "root"))
    code, out, _ = _run(capsys, "render", "--pipeline", "mlp", "--seed", "4")
    assert code == 0
    target = tmp_path / "root" / "render-mlp-tiny-s4"
    assert out.strip() == str(target)
    assert (target / "image.ppm").exists()


def test_version(capsys):
    code, out, _ = _run(capsys, "--version")
    assert code == 0 and out.startswith("rendersim ")
