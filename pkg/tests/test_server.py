#!/usr/bin/env python3
# MCP tools called directly as coroutines

import asyncio
import json

import pytest

from src.core.server import (RULES_CONFIG, check_hypotheses, fractional_constants, fredholm_solve,
                             run_verification)

SMALL = json.dumps({"box": {"n": 1, "L": 8.0, "N": 128}, "coefficients": {"preset": "identity", "a0": 1.0}})


def test_rules_loaded_at_import():
    assert "rules" in RULES_CONFIG
    assert RULES_CONFIG["rules"]


def test_fractional_constants_tool():
    result = asyncio.run(fractional_constants(1, [0.5]))
    lines = result.splitlines()
    assert lines[0].startswith("n=1")
    assert "s=0.5" in lines[1] and "identity residual" in lines[1]


def test_fractional_constants_tool_reports_domain_errors():
    result = asyncio.run(fractional_constants(1, [1.5]))
    assert result.startswith("❌")


def test_check_hypotheses_tool():
    assert asyncio.run(check_hypotheses(SMALL)).startswith("✅")
    assert asyncio.run(check_hypotheses('{"hypotheses": {"p": 1.5}}')).startswith("❌ 假设不成立")
    assert asyncio.run(check_hypotheses('{"box": ')).startswith("❌ 配置错误")


def test_fredholm_solve_tool():
    result = asyncio.run(fredholm_solve(SMALL))
    assert "σ₀=" in result.splitlines()[0]
    assert "✅" in result and "unique" in result


def test_fredholm_solve_tool_config_error():
    assert asyncio.run(fredholm_solve('{"unknown": 1}')).startswith("❌ 配置错误")


def test_run_verification_tool():
    result = asyncio.run(run_verification(["constants_identity", "constants_limit"]))
    assert result.startswith("✅")


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
