# cli.py
"""
命令行入口: python -m src.core.cli <subcommand> [options]

子命令: constants, gradient, verify, hypotheses, spectrum, solve, fredholm-demo。
退出码: 0 成功; 1 配置错误或其他计算错误; 2 假设不成立或断言失败;
3 共振 σ 处右端不相容。
"""

import argparse
import logging
import os
import sys
from typing import Any, Dict, List, Optional

import numpy as np

from src.core import verification
from src.core.coefficients import hypothesis_check
from src.core.config import config, setup_environment
from src.core.errors import ConfigError, HypothesisViolation, NonlocalError
from src.core.fractional_calculus import QuadratureSpec, frac_gradient_quadrature, frac_gradient_spectral
from src.core.fredholm_solver import INCOMPATIBLE, assemble, solve, spectrum
from src.core.problem import ProblemConfig, load_problem
from src.core.profiles import canonical_family
from src.core.special_functions import grad_constant, riesz_constant, unit_ball_volume
from src.utils.io import read_grid_function, write_csv, write_grid_function, write_json
from src.utils.utils import config_hash, setup_logging

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_HYPOTHESIS = 2
EXIT_INCOMPATIBLE = 3


def _status(message: str) -> None:
    print(message, file=sys.stderr)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nonlocal-fredholm",
                                     description="fractional gradients, mixed-order forms and the Fredholm alternative")
    parser.add_argument("--out", default=None, help="output directory (default NONLOCAL_FREDHOLM_OUT)")
    parser.add_argument("--no-timestamp", action="store_true", help="omit timestamps from JSON outputs")
    parser.add_argument("--env-file", default=".env")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("constants", help="tabulate c_{s,n} and gamma_{1-s,n}")
    p.add_argument("--n", type=int, action="append", help="dimension (repeatable, default 1 2 3)")
    p.add_argument("--s", type=float, action="append", help="order (repeatable, default 0.1..0.9)")

    p = sub.add_parser("gradient", help="D^s of a canonical profile or a sampled CSV")
    p.add_argument("--config", default=None)
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--method", choices=("spectral", "quadrature"), default="spectral")
    p.add_argument("--profile", type=int, default=0, help="index into the canonical probe family")
    p.add_argument("--input", default=None, help="grid function CSV written by this tool")

    p = sub.add_parser("verify", help="run the verification rules")
    p.add_argument("--suite", default="all", help="all, quick or a path to a rules TOML file")
    p.add_argument("--seed", type=int, default=7)

    for name, text in (("hypotheses", "check the coefficient hypotheses"),
                       ("spectrum", "resonance set below sigma0"),
                       ("solve", "Fredholm solve at the configured sigma"),
                       ("fredholm-demo", "hypotheses, spectrum and solve in one run")):
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", required=name != "hypotheses")
        p.add_argument("--seed", type=int, default=None)
        if name == "spectrum":
            p.add_argument("--count", type=int, default=None)
    return parser


def _problem(args) -> ProblemConfig:
    cfg = load_problem(args.config) if getattr(args, "config", None) else ProblemConfig.from_dict({})
    if getattr(args, "seed", None) is not None:
        raw = cfg.to_dict()
        raw["seed"] = args.seed
        cfg = ProblemConfig.from_dict(raw)
    return cfg


# -- subcommands --------------------------------------------------------------------

def cmd_constants(args, out: str, stamp: bool) -> int:
    dims = args.n or [1, 2, 3]
    orders = args.s or [round(x, 10) for x in np.linspace(0.1, 0.9, 9)]
    rows = []
    for n in dims:
        for s in orders:
            c = grad_constant(s, n)
            row: Dict[str, Any] = {"n": n, "s": s, "c_s": c}
            if 0.0 < 1.0 - s < n:
                gamma_value = riesz_constant(1.0 - s, n)
                row.update({"gamma_1_minus_s": gamma_value, "product": c * gamma_value})
            row["c_s_over_1_minus_s"] = c / (1.0 - s)
            row["inv_ball_volume"] = 1.0 / unit_ball_volume(n)
            rows.append(row)
    digest = config_hash({"command": "constants", "n": dims, "s": orders})
    path = write_csv(rows, os.path.join(out, "constants.csv"), digest,
                     ["n", "s", "c_s", "gamma_1_minus_s", "product", "c_s_over_1_minus_s", "inv_ball_volume"])
    _status(f"✅ constants: {len(rows)} rows -> {path}")
    return EXIT_OK


def cmd_gradient(args, out: str, stamp: bool) -> int:
    cfg = _problem(args)
    box, omega = cfg.box, cfg.omega
    digest = config_hash({"problem": cfg.to_dict(), "s": args.s, "method": args.method,
                          "profile": args.profile, "input": args.input})
    names = [f"x{i + 1}" for i in range(box.n)]
    components = [f"D{i + 1}" for i in range(box.n)]
    if args.method == "spectral":
        if args.input:
            u = read_grid_function(args.input, box)
        else:
            u = canonical_family(box.n, omega)[args.profile].sample(box)
        field = frac_gradient_spectral(u, args.s).array.reshape(box.n, -1)
        rows = [dict(zip(names + components, list(x) + list(field[:, k]))) for k, x in enumerate(box.points)]
    else:
        if args.input:
            raise ConfigError("gradient.input", "quadrature needs a profile, not sampled data")
        profile = canonical_family(box.n, omega)[args.profile]
        rows = []
        for x in box.points[omega.mask(box).ravel()]:
            spec = QuadratureSpec(truncation_radius=float(np.linalg.norm(x)) + profile.support_radius + 1.5)
            value = frac_gradient_quadrature(profile, args.s, x, spec)
            rows.append(dict(zip(names + components, list(x) + list(value))))
    path = write_csv(rows, os.path.join(out, f"gradient_{args.method}.csv"), digest, names + components)
    _status(f"✅ gradient ({args.method}, s={args.s}): {len(rows)} points -> {path}")
    return EXIT_OK


def cmd_verify(args, out: str, stamp: bool) -> int:
    path = verification.SUITES.get(args.suite, args.suite)
    rules = verification.load_rules_config(path)
    result = verification.run_suite(rules, seed=args.seed)
    digest = config_hash({"rules": rules, "seed": args.seed})
    csv_path = write_csv(result.rows, os.path.join(out, "verify.csv"), digest, verification.COLUMNS)
    if result.ok:
        _status(f"✅ verify: {len(result.rows)} rows, all asserted checks passed -> {csv_path}")
        return EXIT_OK
    for row in result.failures[:10]:
        _status(f"❌ {row['rule']} {row['probe']} {row['params']}: lhs={row['lhs']:.6g} rhs={row['rhs']:.6g}")
    _status(f"❌ verify: {len(result.failures)} asserted checks failed -> {csv_path}")
    return EXIT_HYPOTHESIS


def _hypotheses(cfg: ProblemConfig, out: str, stamp: bool) -> Dict[str, Any]:
    h = cfg.hypotheses
    report = hypothesis_check(cfg.coefficients, cfg.measure, cfg.omega, h["delta"], h["R"], h["C"], h["p"],
                              relax_at_one=h["relax_at_one"])
    data = {"config": cfg.to_dict(), "K_A": report.K_A, "delta": report.delta, "p_delta": report.p_delta,
            "growth_ok": report.growth_ok, "local_integrability_ok": report.local_integrability_ok,
            "relaxed": report.relaxed, "lambda_inv_integral": report.lambda_inv_integral,
            "Lambda_integral": report.Lambda_integral, "messages": report.messages}
    write_json(data, os.path.join(out, "hypotheses.json"), cfg.digest, stamp)
    _status(f"✅ hypotheses hold: K_A={report.K_A:.6g}, p(delta)={report.p_delta:.6g}")
    return data


def cmd_hypotheses(args, out: str, stamp: bool) -> int:
    _hypotheses(_problem(args), out, stamp)
    return EXIT_OK


def _spectrum(cfg: ProblemConfig, system, out: str, stamp: bool, count: Optional[int] = None):
    report = spectrum(system, count)
    rows = [{"sigma": s, "multiplicity": m} for s, m in report.sigmas]
    write_csv(rows, os.path.join(out, "spectrum.csv"), cfg.digest, ["sigma", "multiplicity"])
    write_json({"config": cfg.to_dict(), "sigma0": report.sigma0, "tolerance": report.tolerance,
                "discarded": report.discarded, "sigmas": report.sigmas,
                "adjoint_defect": system.adjoint_defect},
               os.path.join(out, "spectrum.json"), cfg.digest, stamp)
    _status(f"✅ spectrum: {len(rows)} values below sigma0={report.sigma0:.6g}")
    return report


def cmd_spectrum(args, out: str, stamp: bool) -> int:
    cfg = _problem(args)
    system = assemble(cfg.context(), rank_tolerance=cfg.rank_tolerance)
    _spectrum(cfg, system, out, stamp, args.count)
    return EXIT_OK


def _solve_all(cfg: ProblemConfig, system, out: str, stamp: bool, resonances: Optional[List[float]] = None) -> int:
    sigmas = cfg.sigmas(system.ctx.sigma0)
    sweep = len(sigmas) > 1 or isinstance(cfg.data["sigma"], dict)
    summary, code = [], EXIT_OK
    for i, sigma in enumerate(sigmas):
        report = solve(system, sigma, cfg.rhs(system, sigma))
        suffix = f"_{i:04d}" if sweep else ""
        data = {"config": cfg.to_dict(), **report.to_dict()}
        write_json(data, os.path.join(out, f"solve{suffix}.json"), cfg.digest, stamp)
        if report.solution is not None:
            write_grid_function(system.embed(report.solution), os.path.join(out, f"solution{suffix}.csv"), cfg.digest)
        summary.append({"index": i, "sigma": sigma, "status": report.status, "residual": report.residual,
                        "kernel_dimension": len(report.kernel_basis)})
        if report.status == INCOMPATIBLE:
            code = EXIT_INCOMPATIBLE
            _status(f"❌ sigma={sigma:.6g}: resonant and incompatible")
        elif not sweep:
            _status(f"✅ sigma={sigma:.6g}: {report.status}, residual {report.residual:.3e}")
    if sweep:
        if resonances is None:
            resonances = spectrum(system).values
        for prev, row in zip(summary, summary[1:]):
            row["crosses"] = [s for s in resonances if prev["sigma"] < s <= row["sigma"]]
        if summary:
            summary[0]["crosses"] = [s for s in resonances if s == summary[0]["sigma"]]
        write_json({"config": cfg.to_dict(), "sweep": summary}, os.path.join(out, "solve_summary.json"),
                   cfg.digest, stamp)
        _status(f"{'✅' if code == EXIT_OK else '⚠️ '} sweep of {len(summary)} sigma values written to {out}")
    return code


def cmd_solve(args, out: str, stamp: bool) -> int:
    cfg = _problem(args)
    system = assemble(cfg.context(), rank_tolerance=cfg.rank_tolerance)
    return _solve_all(cfg, system, out, stamp)


def cmd_fredholm_demo(args, out: str, stamp: bool) -> int:
    cfg = _problem(args)
    _hypotheses(cfg, out, stamp)
    system = assemble(cfg.context(), rank_tolerance=cfg.rank_tolerance)
    report = _spectrum(cfg, system, out, stamp)
    return _solve_all(cfg, system, out, stamp, report.values)


COMMANDS = {
    "constants": cmd_constants,
    "gradient": cmd_gradient,
    "verify": cmd_verify,
    "hypotheses": cmd_hypotheses,
    "spectrum": cmd_spectrum,
    "solve": cmd_solve,
    "fredholm-demo": cmd_fredholm_demo,
}


def run(argv: Optional[List[str]] = None) -> int:
    """
    执行一个子命令并返回退出码

    Args:
        argv: 命令行参数, 默认取 sys.argv[1:]

    Returns:
        int: 0/1/2/3
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_ERROR if e.code else EXIT_OK
    if os.path.exists(args.env_file):
        setup_environment(args.env_file)
    setup_logging()
    out = args.out or config.out_dir
    try:
        return COMMANDS[args.command](args, out, not args.no_timestamp)
    except ConfigError as e:
        _status(f"❌ config error: {e}")
        return EXIT_ERROR
    except HypothesisViolation as e:
        _status(f"❌ hypothesis violated: {e}")
        return EXIT_HYPOTHESIS
    except NonlocalError as e:
        _status(f"❌ {type(e).__name__}: {e}")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(run())
