#!/usr/bin/env python3
# Verification rules (TOML), environment settings and JSON problem configs

import glob
import json
import os
from unittest import mock

import pytest

from src.core.config import config, setup_environment
from src.core.errors import ConfigError
from src.core.problem import DEFAULTS, ProblemConfig, load_problem
from src.core.verification import SUITES, get_default_rules, load_rules_config

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def test_full_rules_file_loads():
    rules = load_rules_config(SUITES["all"])
    assert rules["general"]["suite"] == "all"
    for name in ("constants_identity", "symbol_cross", "tail", "certificates", "fredholm", "trudinger",
                 "noncompact_scaling"):
        assert name in rules["rules"], name
    for name, rule in rules["rules"].items():
        assert rule["id"].startswith("V"), name
        assert rule["level"] in ("error", "warning"), name
        assert isinstance(rule["enabled"], bool), name


def test_quick_rules_file_loads():
    rules = load_rules_config(SUITES["quick"])
    assert rules["rules"]["order_comparison"]["enabled"] is False
    assert rules["rules"]["symbol_cross"]["dimensions"] == [1]


def test_missing_rules_file_falls_back(tmp_path):
    assert load_rules_config(str(tmp_path / "absent.toml")) == get_default_rules()


def test_malformed_rules_file_falls_back(tmp_path):
    path = tmp_path / "broken.toml"
    path.write_text("[rules.tail\nenabled = ", encoding="utf-8")
    assert load_rules_config(str(path)) == get_default_rules()


def test_rules_path_from_environment(tmp_path):
    path = tmp_path / "custom.toml"
    path.write_text('[rules.constants_limit]\nid = "V102"\nenabled = true\nlevel = "error"\n', encoding="utf-8")
    with mock.patch.dict(os.environ, {"NONLOCAL_FREDHOLM_RULES": str(path)}):
        assert config.rules_path == str(path)
        assert list(load_rules_config()["rules"]) == ["constants_limit"]


def test_thread_setting_validation():
    with mock.patch.dict(os.environ, {"NONLOCAL_FREDHOLM_THREADS": "3"}):
        assert config.threads == 3
    for bad in ("0", "many"):
        with mock.patch.dict(os.environ, {"NONLOCAL_FREDHOLM_THREADS": bad}):
            with pytest.raises(ValueError):
                _ = config.threads


def test_setup_environment(tmp_path):
    assert setup_environment(str(tmp_path / "missing.env")) is False
    good = tmp_path / "good.env"
    good.write_text("NONLOCAL_FREDHOLM_THREADS=2\nLOG_LEVEL=DEBUG\n", encoding="utf-8")
    bad = tmp_path / "bad.env"
    bad.write_text("NONLOCAL_FREDHOLM_THREADS=-1\n", encoding="utf-8")
    with mock.patch.dict(os.environ, {}, clear=True):
        assert setup_environment(str(good)) is True
        assert config.log_level == "DEBUG"
    with mock.patch.dict(os.environ, {}, clear=True):
        assert setup_environment(str(bad)) is False


def test_problem_defaults():
    cfg = ProblemConfig.from_dict({})
    assert cfg.to_dict() == DEFAULTS
    assert cfg.sigmas(4.0) == [5.0]
    assert cfg.box.points_per_axis == 256


def test_problem_digest_is_stable():
    a = ProblemConfig.from_dict({"box": {"N": 128}})
    b = ProblemConfig.from_dict({"box": {"N": 128}})
    c = ProblemConfig.from_dict({"box": {"N": 512}})
    assert a.digest == b.digest
    assert a.digest != c.digest


def test_sigma_sweep():
    cfg = ProblemConfig.from_dict({"sigma": {"sweep": [-2, 2, 5]}})
    assert cfg.sigmas(0.0) == [-2.0, -1.0, 0.0, 1.0, 2.0]


@pytest.mark.parametrize("raw, field", [
    ({"solver": {}}, "solver"),
    ({"box": {"M": 3}}, "box.M"),
    ({"box": 3}, "box"),
    ({"box": {"N": 7}}, "box"),
    ({"box": {"L": 4.0}}, "omega"),
    ({"rhs": {"kind": "random"}}, "rhs.kind"),
    ({"rhs": {"kind": "csv"}}, "rhs.path"),
    ({"sigma": {"sweep": [0, 1]}}, "sigma"),
    ({"sigma": "resonant"}, "sigma"),
    ({"seed": 1.5}, "seed"),
])
def test_problem_errors_carry_field_path(raw, field):
    with pytest.raises(ConfigError) as info:
        ProblemConfig.from_dict(raw)
    assert info.value.field == field


def test_load_problem_reports_json_position(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "box": {"n": 1,}\n}\n', encoding="utf-8")
    with pytest.raises(ConfigError) as info:
        load_problem(str(path))
    assert info.value.field.startswith("line 2")


def test_load_problem_missing_file(tmp_path):
    with pytest.raises(ConfigError) as info:
        load_problem(str(tmp_path / "absent.json"))
    assert info.value.field == "<file>"


@pytest.mark.parametrize("path", sorted(glob.glob(os.path.join(ROOT, "configs", "*.json"))))
def test_shipped_configs_load(path):
    cfg = load_problem(path)
    with open(path, encoding="utf-8") as f:
        raw = json.load(f)
    assert cfg.n == raw["box"]["n"]
    cfg.context()


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
