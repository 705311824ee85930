"""Command-line front end: reproducibility, config merging, exit codes."""

import hashlib
import json

import pytest

from multipeak.cli import EXIT_CONFIG, EXIT_NUMERICAL, _render, main


def run(tmp_path, name, args):
    out = tmp_path / name
    code = main(args + ["--out", str(out)])
    return code, out


def test_groundstate_reproducible(tmp_path):
    code1, f1 = run(tmp_path, "a.json", ["groundstate", "--dim", "1", "--p", "3"])
    code2, f2 = run(tmp_path, "b.json", ["groundstate", "--dim", "1", "--p", "3"])
    assert code1 == code2 == 0
    assert f1.read_bytes() == f2.read_bytes()


def test_spectrum_reproducible(tmp_path):
    args = ["spectrum", "--eps", "0.3", "--k", "2"]
    code1, f1 = run(tmp_path, "s1.json", args)
    code2, f2 = run(tmp_path, "s2.json", args)
    assert code1 == code2 == 0
    assert f1.read_bytes() == f2.read_bytes()


def test_content_hash_verifies(tmp_path):
    code, f = run(tmp_path, "g.json", ["groundstate", "--dim", "1", "--p", "3"])
    assert code == 0
    doc = json.loads(f.read_text())
    recorded = doc.pop("content_hash")
    recomputed = hashlib.sha256(_render(doc).encode()).hexdigest()
    assert recorded == recomputed


def test_render_is_json():
    text = _render(
        {"a": [1.5, 2, True, None], "b": {"c": float("1e-300")}, "s": "x"}
    )
    assert json.loads(text) == {
        "a": [1.5, 2, True, None],
        "b": {"c": 1e-300},
        "s": "x",
    }


def test_config_file_with_flag_override(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[common]\ndim = 2\np = 3\n[ansatz]\neps = 0.3\nk = 2\n")
    base = ["--config", str(cfg), "ansatz"]
    code1, f1 = run(tmp_path, "c1.json", base)
    code2, f2 = run(tmp_path, "c2.json", base)
    assert code1 == code2 == 0
    assert f1.read_bytes() == f2.read_bytes()
    # a flag overrides the file value and changes the resolved config
    code3, f3 = run(tmp_path, "c3.json", base + ["--k", "1"])
    assert code3 == 0
    assert json.loads(f3.read_text())["config"]["k"] == 1


def test_missing_config_file():
    assert main(["--config", "/nonexistent.ini", "ansatz"]) == EXIT_CONFIG


def test_invalid_exponent_exit_code():
    assert main(["ansatz", "--eps", "0.3", "--k", "2", "--p", "1.5"]) == EXIT_CONFIG


def test_missing_required_parameter():
    assert main(["reduce", "--k", "2"]) == EXIT_CONFIG


def test_numerical_failure_exit_code():
    # peaks too close for a clean near kernel: numerical failure, not config
    assert main(["spectrum", "--eps", "1.2", "--k", "2"]) == EXIT_NUMERICAL


def test_oracle_taylor_deterministic(tmp_path):
    args = ["oracle", "taylor", "--n", "2000", "--seed", "9"]
    code1, f1 = run(tmp_path, "t1.json", args)
    code2, f2 = run(tmp_path, "t2.json", args)
    assert code1 == code2 == 0
    assert f1.read_bytes() == f2.read_bytes()
    doc = json.loads(f1.read_text())
    assert doc["results"]["max_ratio"] <= 1.0 + 1e-12
