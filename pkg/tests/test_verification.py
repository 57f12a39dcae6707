#!/usr/bin/env python3
# Rule-driven verification runs

import json

import pytest

from src.core.verification import COLUMNS, CHECKS, SUITES, get_default_rules, load_rules_config, run_suite


def _rules(**rules):
    return {"general": {"suite": "test"}, "rules": rules}


def test_every_shipped_rule_has_a_check():
    for suite in SUITES.values():
        for name in load_rules_config(suite)["rules"]:
            assert name in CHECKS, name
    for name in get_default_rules()["rules"]:
        assert name in CHECKS, name


def test_rows_carry_all_columns():
    result = run_suite(_rules(constants_identity={"id": "V101", "level": "error"}))
    assert len(result.rows) == 27
    assert result.ok
    for row in result.rows:
        assert list(row) == COLUMNS
        assert json.loads(row["params"])["n"] in (1, 2, 3)


def test_disabled_and_unknown_rules_are_skipped():
    result = run_suite(_rules(constants_identity={"id": "V101", "enabled": False},
                              no_such_check={"id": "V999"},
                              constants_limit={"id": "V102"}))
    assert {row["rule"] for row in result.rows} == {"V102"}


def test_warning_level_failures_do_not_fail_the_run():
    failing = {"id": "V102", "s": 0.5, "tolerance": 1e-6}
    errors = run_suite(_rules(constants_limit={**failing, "level": "error"}))
    assert not errors.ok and len(errors.failures) == 3
    warnings = run_suite(_rules(constants_limit={**failing, "level": "warning"}))
    assert warnings.ok
    assert not any(row["pass"] for row in warnings.rows)


def test_symbol_integral_rule_passes_at_tight_tolerance():
    result = run_suite(_rules(symbol_integral={"id": "V201", "level": "error", "tolerance": 1e-8}))
    assert result.ok, result.failures
    probes = [row["probe"] for row in result.rows]
    assert probes.count("sinc_moment") == 3
    assert probes.count("sphere_moment") == 6


def test_symbol_cross_in_two_dimensions():
    rule = {"id": "V301", "level": "error", "dimensions": [2], "orders": [0.5, 0.8], "bumps": 5, "points": 3}
    result = run_suite(_rules(symbol_cross=rule))
    assert len(result.rows) == 10
    assert result.ok, result.failures


def test_trudinger_rule_passes():
    result = run_suite(_rules(trudinger={"id": "V602", "level": "error", "N": 256}))
    assert result.ok, result.failures


def test_weighted_holder_rule_passes():
    result = run_suite(_rules(weighted_holder={"id": "V402", "level": "error", "N": 256, "family_size": 3}))
    assert result.ok, result.failures
    assert len(result.rows) == 3


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
