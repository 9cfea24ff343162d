import csv
import json

import pytest

from ppbvortex.cli import RunConfig, build_parser, config_from_args, fmt, main


def run(args, capsys):
    code = main(args)
    out, err = capsys.readouterr()
    return code, out, err


def test_pattern_eval_csv_shape(capsys):
    code, out, _ = run(["pattern-eval", "--name", "BASIC", "--grid", "64"], capsys)
    assert code == 0
    rows = list(csv.reader(out.splitlines()))
    assert rows[0] == ["x", "y", "re_psi", "im_psi", "density", "vx", "vy", "valid"]
    assert len(rows) == 1 + 64 * 64


def test_pattern_eval_s2_minimum_at_origin(capsys, tmp_path):
    out = tmp_path / "s2.json"
    code, _, _ = run(["pattern-eval", "--name", "S2", "--alpha", "1.5708", "--grid", "41",
                      "--format", "json", "--out", str(out)], capsys)
    assert code == 0
    rows = json.loads(out.read_text())
    best = min(rows, key=lambda r: r["density"])
    assert abs(best["x"]) < 0.1 / 2 and abs(best["y"]) < 0.1 / 2


def test_invalid_name_exit_2(capsys):
    code, _, err = run(["vortices", "--name", "S7"], capsys)
    assert code == 2
    assert "BASIC" in err and "M4" in err


def test_bad_flag_combination_exit_2(capsys):
    code, _, err = run(["vortices", "--name", "S1", "--b", "2"], capsys)
    assert code == 2


def test_vortices_examples(capsys):
    _, out, _ = run(["vortices", "--name", "S1", "--c", "0.7"], capsys)
    s1 = json.loads(out)
    assert len(s1) == 3
    assert all(set(r) == {"x", "y", "winding", "circulation", "kind"} for r in s1)
    assert [(r["y"], r["x"]) for r in s1] == sorted((r["y"], r["x"]) for r in s1)
    _, out, _ = run(["vortices", "--name", "M4", "--b", "0.8", "--t", "0.0"], capsys)
    assert len(json.loads(out)) == 4
    _, out, _ = run(["vortices", "--name", "BASIC"], capsys)
    basic = json.loads(out)
    assert [r["kind"] for r in basic] == ["degenerate"]


def test_loci_json(capsys):
    code, out, _ = run(["loci", "--name", "M2", "--c", "1", "--t", "0"], capsys)
    assert code == 0
    data = json.loads(out)
    assert sorted(map(tuple, data["positions"])) == [(-1.0, -1.0), (-1.0, 1.0), (1.0, -1.0),
                                                     (1.0, 1.0)]


def test_track_outputs_stable(tmp_path, capsys):
    stems = [tmp_path / "a", tmp_path / "b"]
    for stem, jobs in zip(stems, ("1", "3")):
        code, _, _ = run(["track", "--name", "M1", "--c", "1", "--t0", "-0.2", "--t1", "0.6",
                          "--dt", "0.1", "--out", str(stem), "--format", "svg",
                          "--jobs", jobs], capsys)
        assert code == 0
    for suffix in ("_tracks.csv", "_events.json", ".svg"):
        a = (tmp_path / f"a{suffix}").read_bytes()
        b = (tmp_path / f"b{suffix}").read_bytes()
        assert a == b
    events = json.loads((tmp_path / "a_events.json").read_text())
    assert [e["kind"] for e in events] == ["CREATION"]
    rows = list(csv.reader((tmp_path / "a_tracks.csv").read_text().splitlines()))
    assert rows[0] == ["track_id", "t", "x", "y", "winding"]
    assert (tmp_path / "a.svg").read_text().startswith("<svg")


def test_config_round_trip(tmp_path, capsys):
    path = tmp_path / "cfg.json"
    out1 = tmp_path / "v1.json"
    out2 = tmp_path / "v2.json"
    code, _, _ = run(["vortices", "--name", "S3", "--c", "0.5", "--window", "1.5",
                      "--write-config", str(path), "--out", str(out1)], capsys)
    assert code == 0
    cfg = RunConfig.load(path)
    assert cfg.name == "S3" and cfg.window == 1.5
    code, _, _ = run(["vortices", "--config", str(path), "--out", str(out2)], capsys)
    assert code == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_config_unknown_key(tmp_path, capsys):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"name": "S1", "colour": "red"}))
    code, _, err = run(["vortices", "--config", str(path)], capsys)
    assert code == 2 and "colour" in err


def test_flags_override_config(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(RunConfig(name="S1", c=0.3).dumps())
    args = build_parser().parse_args(["vortices", "--config", str(path), "--c", "0.9"])
    cfg = config_from_args(args)
    assert cfg.name == "S1" and cfg.c == 0.9


def test_window_bounds_flag():
    args = build_parser().parse_args(["vortices", "--window=-1,2,-3,4"])
    win = config_from_args(args).scan_window()
    assert (win.x_min, win.x_max, win.y_min, win.y_max) == (-1, 2, -3, 4)


def test_number_format():
    assert fmt(-0.0) == "0.0"
    assert fmt(0.1) == "0.1"
    assert fmt(True) == "1"
    assert fmt(3) == "3"
    assert fmt("vortex") == "vortex"


def test_residual_corrupt_hook_fails(capsys):
    code, out, _ = run(["residual", "--suites", "2", "--corrupt", "f1"], capsys)
    assert code == 1
    assert "FAIL" in out


def test_residual_single_suite_passes(capsys):
    code, out, _ = run(["residual", "--suites", "1,10"], capsys)
    assert code == 0
    assert "2/2 suites passed" in out


def test_unknown_suite_exit_2(capsys):
    code, _, _ = run(["residual", "--suites", "42"], capsys)
    assert code == 2
