import json

import numpy as np
import pytest

from pwexpand import cli
from pwexpand.gallery import example_text


def run(args, capsys):
    code = cli.main(args)
    out, err = capsys.readouterr()
    return code, out, err


def test_check_exit_codes(capsys):
    code, out, _ = run(["check", "doubling", "--j-max", "6"], capsys)
    assert code == cli.EXIT_OK
    doc = json.loads(out)
    assert doc["pass"] and [r["assumption"] for r in doc["reports"]] == ["1", "2", "3", "5"]
    code, out, _ = run(["check", "negative_control", "--j-max", "4"], capsys)
    assert code == cli.EXIT_CHECK
    failed = {r["assumption"] for r in json.loads(out)["reports"] if not r["pass"]}
    assert "5" in failed


def test_check_with_large_images(capsys):
    code, out, _ = run(["check", "figure1", "--delta", "0.4"], capsys)
    assert code == cli.EXIT_OK
    assert json.loads(out)["reports"][-1]["assumption"] == "6"


def test_density_output(tmp_path, capsys):
    summary = tmp_path / "s.json"
    code, out, _ = run(["density", "doubling", "--a", "0.1", "--bins", "64",
                        "--summary", str(summary)], capsys)
    assert code == 0
    data = np.loadtxt(out.splitlines())
    assert data.shape == (64, 2) and np.allclose(data[:, 1], 0.5)
    s = json.loads(summary.read_text())
    assert s["lower_bound_N1"] == pytest.approx(0.125)


def test_sweep_writes_csv_and_summary(tmp_path, capsys):
    out_csv, out_json = tmp_path / "rows.csv", tmp_path / "summary.json"
    code, _, _ = run(["sweep", "lambda4", "--grid", "4", "--n", "5000", "--bins", "128",
                      "-o", str(out_csv), "--summary", str(out_json)], capsys)
    assert code == 0
    assert len(out_csv.read_text().splitlines()) == 5
    assert json.loads(out_json.read_text())["parameters"] == 4


def test_nested(capsys):
    code, out, _ = run(["nested", "lambda4", "--a0", "0", "--depth", "6"], capsys)
    assert code == cli.EXIT_OK and json.loads(out)["pass"]
    code, out, _ = run(["nested", "doubling", "--a0", "0"], capsys)
    assert code == cli.EXIT_INFEASIBLE and json.loads(out)["infeasible"]
    code, _, err = run(["nested", "lambda4", "--a0", "0", "--t0", "0.5"], capsys)
    assert code == cli.EXIT_INPUT and "t0" in err


def test_expand_demo_is_deterministic(capsys):
    args = ["expand-demo", "lambda4", "--a", "0.05", "--samples", "9"]
    first = run(args, capsys)
    second = run(args, capsys)
    assert first == second and first[0] == 0
    assert first[1].count("case=full") == 2


def test_examples(tmp_path, capsys):
    code, out, _ = run(["examples", "list"], capsys)
    assert code == 0 and "lambda4" in out
    code, out, _ = run(["examples", "emit", "tripling"], capsys)
    assert out == example_text("tripling")
    assert run(["examples", "emit"], capsys)[0] == cli.EXIT_INPUT


def test_input_errors(tmp_path, capsys):
    assert run(["check", str(tmp_path / "missing.json")], capsys)[0] == cli.EXIT_INPUT
    bad = tmp_path / "bad.json"
    bad.write_text(example_text("doubling").replace('"2*x + 1"', '"2*(x + 1"'))
    code, _, err = run(["check", str(bad)], capsys)
    assert code == cli.EXIT_INPUT and "line" in err and "column" in err
    assert run(["density", "doubling", "--a", "5"], capsys)[0] == cli.EXIT_INPUT
    assert run(["check", "doubling", "--gamma", "2"], capsys)[0] == cli.EXIT_INPUT
    assert run(["--help"], capsys)[0] == cli.EXIT_OK


def test_profile_is_scoped(capsys):
    from pwexpand.config import TOL

    before = TOL.current
    code, _, _ = run(["--profile", "strict", "expand-demo", "tripling", "--a", "0"], capsys)
    assert code == 0 and TOL.current is before
