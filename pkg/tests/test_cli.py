import json
import math

import pytest

from vhbound.cli import main


def run(argv, capsys):
    try:
        code = main(argv)
    except SystemExit as exc:
        code = exc.code
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def instance(tmp_path, capsys):
    path = tmp_path / "p.json"
    code, _, _ = run(["generate", "--n", "2", "--kappa", "1", "--seed", "3", "--out", str(path)], capsys)
    assert code == 0
    return path


def test_generate_schema(instance):
    obj = json.loads(instance.read_text())
    assert len(obj["A"]) == 2 and len(obj["b"]) == 2 and len(obj["factors"]) == 2


def test_gaussian_1d_value(tmp_path, capsys):
    path = tmp_path / "g.json"
    path.write_text(json.dumps({"n": 1, "A": [[2.0]], "b": [0.0], "factors": ["one"]}))
    code, out, _ = run(["solve-vh", "--in", str(path)], capsys)
    assert code == 0
    assert json.loads(out)["log_bound"] == pytest.approx(0.5 * math.log(math.pi), abs=1e-8)


def test_pipeline(instance, tmp_path, capsys):
    vh, orc = tmp_path / "vh.json", tmp_path / "o.json"
    assert run(["solve-vh", "--in", str(instance), "--out", str(vh)], capsys)[0] == 0
    assert run(["solve-vb", "--in", str(instance)], capsys)[0] == 0
    assert run(["oracle", "--in", str(instance), "--out", str(orc)], capsys)[0] == 0
    code, out, _ = run(["certify", "--bound", str(vh), "--oracle", str(orc)], capsys)
    assert code == 0
    cert = json.loads(out)
    assert 0.0 <= cert["epsilon"] < 1.0
    assert cert["certified"] in ("p1", "p2", "both")


def test_certify_equal_values(capsys):
    code, out, _ = run(["certify", "--bound", "1.5", "--oracle", "1.5", "--alpha1", "1.5"], capsys)
    assert code == 0
    obj = json.loads(out)
    assert obj["epsilon"] == 0.0 and obj["distance_bound"] == 0.0
    assert "-0.0" not in out


def test_certify_inconsistent_exit_2(capsys):
    code, _, err = run(["certify", "--bound", "1.0", "--oracle", "2.0"], capsys)
    assert code == 2 and json.loads(err)["exit_code"] == 2


@pytest.mark.parametrize("argv", [
    ["solve-vh", "--in", "/nonexistent.json"],
    ["generate", "--n", "2", "--kappa", "-1"],
    ["generate", "--n", "2", "--kappa", "1", "--truncated", "012"],
    ["frobnicate"],
])
def test_invalid_exit_2(argv, capsys):
    code, _, err = run(argv, capsys)
    assert code == 2
    assert set(json.loads(err)) == {"error", "message", "exit_code"}


def test_bad_schema_exit_2(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"n": 1, "A": [[1.0, 2.0]], "b": [0.0], "factors": ["step"]}))
    assert run(["solve-vh", "--in", str(path)], capsys)[0] == 2


def test_grid_too_large_exit_2(tmp_path, capsys):
    path = tmp_path / "p.json"
    run(["generate", "--n", "4", "--kappa", "1", "--out", str(path)], capsys)
    assert run(["oracle", "--in", str(path), "--method", "grid"], capsys)[0] == 2


def test_experiment_and_report(tmp_path, capsys):
    jl = tmp_path / "r.jsonl"
    code, _, _ = run(["experiment", "--kappa", "1", "--n", "2", "--seeds", "1", "--samples", "2000",
                      "--out", str(jl)], capsys)
    assert code == 0
    code, out, _ = run(["report", "--in", str(jl), "--format", "csv", "--no-timing"], capsys)
    assert code == 0
    assert out.splitlines()[0].startswith("kappa,n,seed,status")
    assert "time_vh" not in out
    assert run(["report", "--in", str(jl)], capsys)[0] == 0
