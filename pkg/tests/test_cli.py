#!/usr/bin/env python3
# Command line: outputs, exit codes and reproducibility

import json
import os
from unittest import mock

import pytest
from numpy.testing import assert_allclose

from src.core.cli import EXIT_ERROR, EXIT_HYPOTHESIS, EXIT_INCOMPATIBLE, EXIT_OK, run
from src.utils.io import read_csv

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
TRUDINGER = os.path.join(ROOT, "configs", "trudinger.json")

NONSYMMETRIC = {
    "box": {"n": 1, "L": 8.0, "N": 256},
    "omega": {"shape": "interval", "radius": 1.0},
    "measure": {"atoms": [[0.6, 1.0], [1.0, 0.5]]},
    "coefficients": {"preset": "identity", "a": {"kind": "linear", "values": [1.0]},
                     "b": {"kind": "constant", "values": [1.0]}, "a0": 1.0},
    "rhs": {"kind": "seeded"},
}


def _cli(tmp_path, *args):
    out = tmp_path / "out"
    code = run(["--out", str(out), "--no-timestamp", "--env-file", str(tmp_path / "none.env"), *args])
    return code, out


def _write_config(tmp_path, data, name="problem.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data), encoding="utf-8")
    return str(path)


def test_constants_table(tmp_path):
    code, out = _cli(tmp_path, "constants", "--n", "1", "--n", "2", "--s", "0.5")
    assert code == EXIT_OK
    frame = read_csv(out / "constants.csv")
    assert list(frame["n"]) == [1, 2]
    assert_allclose(frame["product"], [0.5, 1.5], rtol=1e-12)
    with open(out / "constants.csv", encoding="utf-8", newline="") as f:
        first = f.readline()
    assert first.startswith("# config_hash=") and first.endswith("\r\n")


def test_gradient_spectral_profile(tmp_path):
    code, out = _cli(tmp_path, "gradient", "--s", "0.5")
    assert code == EXIT_OK
    frame = read_csv(out / "gradient_spectral.csv")
    assert list(frame.columns) == ["x1", "D1"]
    assert len(frame) == 256


def test_gradient_quadrature_rejects_sampled_input(tmp_path):
    code, _ = _cli(tmp_path, "gradient", "--s", "0.5", "--method", "quadrature", "--input", "u.csv")
    assert code == EXIT_ERROR


def test_verify_custom_suite(tmp_path):
    suite = tmp_path / "suite.toml"
    suite.write_text('[rules.constants_identity]\nid = "V101"\nenabled = true\nlevel = "error"\n'
                     '[rules.constants_limit]\nid = "V102"\nenabled = true\nlevel = "error"\n',
                     encoding="utf-8")
    code, out = _cli(tmp_path, "verify", "--suite", str(suite))
    assert code == EXIT_OK
    frame = read_csv(out / "verify.csv")
    assert set(frame["rule"]) == {"V101", "V102"}
    assert frame["pass"].all()


def test_verify_failure_exit_code(tmp_path):
    suite = tmp_path / "failing.toml"
    suite.write_text('[rules.constants_limit]\nid = "V102"\nenabled = true\nlevel = "error"\n'
                     's = 0.5\ntolerance = 1e-6\n', encoding="utf-8")
    code, _ = _cli(tmp_path, "verify", "--suite", str(suite))
    assert code == EXIT_HYPOTHESIS


def test_verify_is_identical_across_thread_caps(tmp_path):
    suite = tmp_path / "threads.toml"
    suite.write_text('[rules.constants_identity]\nid = "V101"\nenabled = true\nlevel = "error"\n'
                     '[rules.certificates]\nid = "V501"\nenabled = true\nlevel = "error"\nN = 256\n'
                     '[rules.fredholm]\nid = "V601"\nenabled = true\nlevel = "error"\nN = 256\nsweep = 5\n',
                     encoding="utf-8")
    outputs, codes = [], []
    for threads in ("1", "4"):
        out = tmp_path / f"out_{threads}"
        with mock.patch.dict(os.environ, {"NONLOCAL_FREDHOLM_THREADS": threads}):
            codes.append(run(["--out", str(out), "--no-timestamp", "--env-file", str(tmp_path / "none.env"),
                              "verify", "--suite", str(suite)]))
        outputs.append((out / "verify.csv").read_bytes())
    assert codes[0] == codes[1]
    assert outputs[0] == outputs[1]


def test_fredholm_demo_is_reproducible(tmp_path):
    first, out = _cli(tmp_path, "fredholm-demo", "--config", TRUDINGER)
    assert first == EXIT_OK
    names = ("hypotheses.json", "spectrum.json", "spectrum.csv", "solve.json", "solution.csv")
    before = {name: (out / name).read_bytes() for name in names}
    second, _ = _cli(tmp_path, "fredholm-demo", "--config", TRUDINGER)
    assert second == EXIT_OK
    assert {name: (out / name).read_bytes() for name in names} == before
    report = json.loads(before["solve.json"])
    assert report["status"] == "unique"
    assert "timestamp" not in report
    assert len(report["config_hash"]) == 64


def test_incompatible_solve_exit_code(tmp_path):
    code, out = _cli(tmp_path, "spectrum", "--config", _write_config(tmp_path, NONSYMMETRIC), "--count", "1")
    assert code == EXIT_OK
    sigma = json.loads((out / "spectrum.json").read_text(encoding="utf-8"))["sigmas"][0][0]
    resonant = _write_config(tmp_path, {**NONSYMMETRIC, "sigma": sigma}, "resonant.json")
    code, out = _cli(tmp_path, "solve", "--config", resonant)
    assert code == EXIT_INCOMPATIBLE
    report = json.loads((out / "solve.json").read_text(encoding="utf-8"))
    assert report["status"] == "incompatible"
    assert report["kernel_dimension"] == report["adjoint_kernel_dimension"] >= 1


def test_sigma_sweep_summary(tmp_path):
    config = _write_config(tmp_path, {**NONSYMMETRIC, "sigma": {"sweep": [5.0, 6.0, 3]}})
    code, out = _cli(tmp_path, "solve", "--config", config)
    assert code == EXIT_OK
    summary = json.loads((out / "solve_summary.json").read_text(encoding="utf-8"))["sweep"]
    assert [row["sigma"] for row in summary] == [5.0, 5.5, 6.0]
    assert all("crosses" in row for row in summary)
    assert (out / "solve_0002.json").exists()


def test_hypothesis_violation_exit_code(tmp_path):
    config = _write_config(tmp_path, {"hypotheses": {"p": 1.5}})
    code, _ = _cli(tmp_path, "hypotheses", "--config", config)
    assert code == EXIT_HYPOTHESIS


def test_config_errors_exit_code(tmp_path):
    config = _write_config(tmp_path, {"box": {"n": 1, "L": 8.0, "N": 256, "M": 1}})
    code, _ = _cli(tmp_path, "solve", "--config", config)
    assert code == EXIT_ERROR
    code, _ = _cli(tmp_path, "solve", "--config", str(tmp_path / "absent.json"))
    assert code == EXIT_ERROR


def test_parser_errors_exit_code(tmp_path):
    assert _cli(tmp_path, "no-such-command")[0] == EXIT_ERROR
    assert _cli(tmp_path, "solve")[0] == EXIT_ERROR


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
