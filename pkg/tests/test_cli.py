import json
import subprocess
import sys

import pytest

from recordwalk import cli
from recordwalk.seq import Window, window_from_marks


def _run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_simulate_walk_to_stdout(capsys):
    code, out, _ = _run(["simulate-walk", "--window", "5", "--seed", "3"], capsys)
    assert code == 0
    w = Window.from_json(json.loads(out))
    assert (w.lo, w.hi) == (-5, 5)
    assert w.S(0) == 0


def test_reruns_are_byte_identical(tmp_path, capsys):
    for name in ("a", "b"):
        assert cli.main(["sample", "tgwt", "--pi", "0:0.7,1:0.2,2:0.1", "--seed", "9",
                         "--out", str(tmp_path / name)]) == 0
    capsys.readouterr()
    for f in ("sample-tgwt.json", "sample-tgwt.dot", "sample-tgwt.manifest.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_different_seeds_differ(capsys):
    _, a, _ = _run(["simulate-walk", "--window", "50", "--seed", "1"], capsys)
    _, b, _ = _run(["simulate-walk", "--window", "50", "--seed", "2"], capsys)
    assert a != b


def test_precedence_flags_over_manifest_over_defaults(tmp_path, capsys):
    m = tmp_path / "m.json"
    m.write_text(json.dumps({"schema": cli.SCHEMA, "command": "simulate-walk",
                             "params": {"window": 7, "dist": "two_point:0.5,0.5", "seed": 4}}))
    _, out, _ = _run(["simulate-walk", "--manifest", str(m)], capsys)
    w = Window.from_json(json.loads(out))
    assert (w.lo, w.hi) == (-7, 7)
    _, out2, _ = _run(["simulate-walk", "--manifest", str(m), "--window", "3"], capsys)
    assert (Window.from_json(json.loads(out2)).lo) == -3
    p = cli.resolve_params("simulate-walk", {}, None)
    assert p["window"] == 1000 and p["seed"] == 0


def test_run_subcommand_reproduces_saved_manifest(tmp_path, capsys):
    assert cli.main(["verify", "hitting", "--n", "500", "--k-max", "2", "--seed", "5",
                     "--out", str(tmp_path / "a")]) == 0
    saved = tmp_path / "a" / "verify-hitting.manifest.json"
    assert cli.main(["run", str(saved), "--out", str(tmp_path / "b")]) == 0
    capsys.readouterr()
    for f in ("verify-hitting.json", "verify-hitting.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_out_from_environment(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv(cli.OUT_ENV, str(tmp_path))
    assert cli.main(["simulate-walk", "--window", "2"]) == 0
    _, err = capsys.readouterr()
    assert (tmp_path / "simulate-walk.json").exists()
    assert "wrote" in err


def test_path_graph_dot_is_linear(tmp_path, capsys):
    src = tmp_path / "w.json"
    # left_sup=0: nothing left of the window rises above S_-2
    src.write_text(json.dumps(window_from_marks([1, 1, 1, 1, 1], lo=-2, left_sup=0).to_json()))
    assert cli.main(["record-graph", "--input", str(src), "--out", str(tmp_path)]) == 0
    capsys.readouterr()
    dot = (tmp_path / "record-graph.dot").read_text()
    edges = [line.strip() for line in dot.splitlines() if "->" in line]
    assert edges == ["vm2 -> vm1;", "vm1 -> v0;", "v0 -> v1;", "v1 -> v2;", "v2 -> v3;"]
    # 3 has an unknown record and -2 may still have children left of the window
    dashed = [line for line in dot.splitlines() if "dashed" in line]
    assert [line.split()[0] for line in dashed] == ["vm2", "v3"]


def test_censored_component_vertices_are_dashed(tmp_path, capsys):
    src = tmp_path / "w.json"
    src.write_text(json.dumps(window_from_marks([1, -1, -1, 2, -1, 0, -1], lo=-3).to_json()))
    assert cli.main(["transform", "psi", "--input", str(src), "--out", str(tmp_path)]) == 0
    capsys.readouterr()
    dot = (tmp_path / "transform-psi.dot").read_text()
    dashed = {line.split("label=")[1].split('"')[1] for line in dot.splitlines() if "dashed" in line}
    # 1 has an unknown record; -3 and -2 may have children left of the window
    assert "1" in dashed and "-3" in dashed
    assert "0" not in dashed


def test_graph_json_round_trip(tmp_path, capsys):
    assert cli.main(["record-graph", "--window", "20", "--seed", "6", "--out", str(tmp_path)]) == 0
    capsys.readouterr()
    obj = json.loads((tmp_path / "record-graph.json").read_text())
    g = cli.graph_from_json(obj)
    assert cli.graph_json(g) == obj
    obj["graph"]["successor"][0] = 999
    with pytest.raises(cli.ManifestError):
        cli.graph_from_json(obj)


@pytest.mark.parametrize("kind", cli.SAMPLE_KINDS)
def test_every_sampler_runs(kind, tmp_path, capsys):
    argv = ["sample", kind, "--height", "4", "--seed", "1", "--out", str(tmp_path)]
    if kind in ("tgwt", "sbgw"):
        argv += ["--pi", "0:0.7,1:0.2,2:0.1"]
    assert cli.main(argv) == 0
    capsys.readouterr()
    assert (tmp_path / f"sample-{kind}.dot").exists()


@pytest.mark.parametrize("kind", cli.TRANSFORM_KINDS)
def test_every_transform_runs(kind, tmp_path, capsys):
    argv = ["transform", kind, "--span", "32", "--window", "32", "--seed", "2", "--out", str(tmp_path)]
    if kind in ("psi-hat", "construct-pos", "phi-hat"):
        argv += ["--dist", "two_point:0.4,0.6"]
    assert cli.main(argv) == 0, capsys.readouterr().err
    capsys.readouterr()


def test_roundtrip_command(capsys):
    code, out, _ = _run(["roundtrip", "--window", "100", "--count", "5"], capsys)
    assert code == 0
    assert out.startswith("PASS roundtrip: windows=5") and "mismatches=0" in out


def test_roundtrip_command_writes_summary(tmp_path, capsys):
    assert cli.main(["roundtrip", "--window", "50", "--count", "3", "--marked",
                     "--out", str(tmp_path)]) == 0
    capsys.readouterr()
    summary = json.loads((tmp_path / "roundtrip.json").read_text())
    assert summary["mismatches"] == 0 and summary["marked"]
    assert (tmp_path / "roundtrip.csv").read_text().startswith("window,core_lo,core_hi,mismatches")


def test_failed_verification_exits_one(tmp_path, capsys):
    code, out, _ = _run(["verify", "rperp", "--n", "200", "--threshold", "0",
                         "--out", str(tmp_path)], capsys)
    assert code == 1 and out.startswith("FAIL rperp-preservation")
    assert json.loads((tmp_path / "verify-rperp.json").read_text())["passed"] is False


def test_threshold_is_refused_where_it_does_not_apply(capsys):
    code, _, err = _run(["verify", "hitting", "--n", "10", "--threshold", "0.1"], capsys)
    assert code == 2 and "threshold" in err


@pytest.mark.parametrize("manifest", [
    {"schema": "other/9", "command": "simulate-walk"},
    {"command": "nope"},
    {"command": "simulate-walk", "params": {"bogus": 1}},
    {"command": "sample", "kind": "zebra"},
    {"command": "simulate-walk", "params": {"window": "wide"}},
    [1, 2],
])
def test_bad_manifest_exits_two(manifest, tmp_path, capsys):
    m = tmp_path / "bad.json"
    m.write_text(json.dumps(manifest))
    code, _, err = _run(["run", str(m)], capsys)
    assert code == 2 and err.startswith("error:")


def test_unparseable_manifest_and_mismatched_command(tmp_path, capsys):
    m = tmp_path / "bad.json"
    m.write_text("{not json")
    assert _run(["run", str(m)], capsys)[0] == 2
    m.write_text(json.dumps({"command": "roundtrip"}))
    assert _run(["simulate-walk", "--manifest", str(m)], capsys)[0] == 2


def test_sample_radius_past_truncation_is_an_error(capsys):
    code, _, err = _run(["sample", "mekt", "--height", "3", "--radius", "5"], capsys)
    assert code == 2 and "truncation" in err


def test_missing_input_is_an_io_error(tmp_path, capsys):
    code, _, err = _run(["record-graph", "--input", str(tmp_path / "none.json")], capsys)
    assert code == 3 and err.startswith("io error")


def test_console_script_entry_point():
    res = subprocess.run([sys.executable, "-m", "recordwalk.cli", "simulate-walk", "--window", "1"],
                         capture_output=True, text=True, check=True)
    assert json.loads(res.stdout)["lo"] == -1
