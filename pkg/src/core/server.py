from mcp.server import FastMCP
import json
import logging
from typing import Any, Dict, List, Optional

import numpy as np

from src.core.coefficients import hypothesis_check
from src.core.errors import ConfigError, HypothesisViolation, NonlocalError
from src.core.fredholm_solver import INCOMPATIBLE, assemble, solve, spectrum
from src.core.problem import ProblemConfig
from src.core.special_functions import grad_constant, riesz_constant, unit_ball_volume
from src.core.verification import get_default_rules, load_rules_config, run_suite

logger = logging.getLogger(__name__)

# Create FastMCP instance
app = FastMCP("nonlocal-fredholm-mcp-server")

# Load the verification rules once; tools report against them
try:
    RULES_CONFIG = load_rules_config()
    print(f"规则配置加载成功: {RULES_CONFIG.get('general', {})}")
except Exception as e:
    print(f"加载规则配置时发生错误: {e}")
    RULES_CONFIG = get_default_rules()


def _parse_problem(problem_json: str) -> ProblemConfig:
    """把工具参数中的 JSON 文本解析为问题配置"""
    try:
        raw = json.loads(problem_json) if problem_json.strip() else {}
    except json.JSONDecodeError as e:
        raise ConfigError(f"line {e.lineno}, column {e.colno}", e.msg)
    return ProblemConfig.from_dict(raw)


@app.tool()
async def fractional_constants(n: int, s_values: Optional[List[float]] = None) -> str:
    """
    计算分数梯度常数 c_{s,n} 以及恒等式 c_{s,n}·γ_{1-s,n} = n+s-1 的残差。

    Args:
        n: 维数 (1, 2, 3)
        s_values: 阶数列表, 默认 0.1..0.9

    Returns:
        每个 s 一行的文本表
    """
    orders = s_values or [round(float(x), 10) for x in np.linspace(0.1, 0.9, 9)]
    lines = [f"n={n}, 1/ω_n={1.0 / unit_ball_volume(n):.12g}"]
    try:
        for s in orders:
            c = grad_constant(s, n)
            line = f"s={s:g}: c_s={c:.15g}, c_s/(1-s)={c / (1.0 - s):.12g}"
            if 0.0 < 1.0 - s < n:
                residual = c * riesz_constant(1.0 - s, n) - (n + s - 1.0)
                line += f", identity residual={residual:.3e}"
            lines.append(line)
    except NonlocalError as e:
        return f"❌ 计算失败: {e}"
    return "\n".join(lines)


@app.tool()
async def check_hypotheses(problem_json: str = "") -> str:
    """
    检查问题配置中的系数是否满足椭圆性与增长假设。

    Args:
        problem_json: 与 CLI 相同格式的 JSON 问题配置, 空串表示默认配置

    Returns:
        ✅/❌ 开头的检查报告
    """
    try:
        cfg = _parse_problem(problem_json)
        h = cfg.hypotheses
        report = hypothesis_check(cfg.coefficients, cfg.measure, cfg.omega, h["delta"], h["R"], h["C"], h["p"],
                                  relax_at_one=h["relax_at_one"])
    except ConfigError as e:
        return f"❌ 配置错误: {e}"
    except HypothesisViolation as e:
        return f"❌ 假设不成立: {e}"
    except NonlocalError as e:
        return f"❌ {type(e).__name__}: {e}"
    lines = [f"✅ 假设成立 (config_hash={cfg.digest[:12]})",
             f"K_A={report.K_A:.6g}, δ={report.delta:g}, p(δ)={report.p_delta:.6g}, relaxed={report.relaxed}"]
    lines.extend(report.messages)
    return "\n".join(lines)


@app.tool()
async def fredholm_solve(problem_json: str = "", sigma: Optional[float] = None) -> str:
    """
    组装 Galerkin 系统, 给出 σ₀ 以下的共振集, 并按 Fredholm 三择一求解。

    Args:
        problem_json: JSON 问题配置, 空串表示默认配置
        sigma: 位移; 缺省时使用配置中的 sigma

    Returns:
        求解状态、残差与核维数的文本报告
    """
    try:
        cfg = _parse_problem(problem_json)
        system = assemble(cfg.context(), rank_tolerance=cfg.rank_tolerance)
        resonances = spectrum(system)
        sigmas = [sigma] if sigma is not None else cfg.sigmas(system.ctx.sigma0)
        lines = [f"basis size={system.size}, σ₀={resonances.sigma0:.6g}, "
                 f"Σ below σ₀: {[round(s, 8) for s in resonances.values]}"]
        for value in sigmas:
            report = solve(system, value, cfg.rhs(system, value))
            mark = "❌" if report.status == INCOMPATIBLE else "✅"
            lines.append(f"{mark} σ={value:.6g}: {report.status}, residual={report.residual:.3e}, "
                         f"dim ker={len(report.kernel_basis)}, dim ker*={len(report.adjoint_kernel_basis)}")
    except ConfigError as e:
        return f"❌ 配置错误: {e}"
    except NonlocalError as e:
        return f"❌ {type(e).__name__}: {e}"
    return "\n".join(lines)


@app.tool()
async def run_verification(enabled_only: Optional[List[str]] = None, seed: int = 7) -> str:
    """
    执行当前加载的验证规则, 返回失败项摘要。

    Args:
        enabled_only: 只运行这些规则名
        seed: 随机种子

    Returns:
        通过/失败统计与失败行
    """
    rules: Dict[str, Any] = dict(RULES_CONFIG)
    if enabled_only:
        rules = {**rules, "rules": {k: v for k, v in RULES_CONFIG.get("rules", {}).items() if k in enabled_only}}
    result = run_suite(rules, seed=seed)
    if result.ok:
        return f"✅ {len(result.rows)} 行, 所有断言检查通过"
    lines = [f"❌ {len(result.failures)} 个断言检查失败"]
    for row in result.failures:
        lines.append(f"[{row['level'].capitalize()}-{row['rule']}] {row['probe']} {row['params']}: "
                     f"lhs={row['lhs']:.6g}, rhs={row['rhs']:.6g}")
    return "\n".join(lines)


if __name__ == "__main__":
    # 使用 SSE 传输方式运行服务器，避免 Windows 环境下的 stdio 通信问题
    app.run(transport="sse")
