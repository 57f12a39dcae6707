# verification.py
"""
由 TOML 规则文件驱动的一次性验证: 每条规则对应一个检查函数,
产出 (rule, probe, params, lhs, rhs, ratio, pass, level) 行。

level = "error" 的规则被断言, 失败计入 failures; "warning" 只记录。
"""

import logging
import math
import os
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional

import numpy as np
import scipy.integrate
import toml

from src.core import inequality_probes as probes
from src.core.coefficients import LowerOrder, identity
from src.core.config import config
from src.core.fractional_calculus import (QuadratureSpec, classical_gradient, decay_check,
                                          frac_gradient_quadrature, frac_gradient_spectral,
                                          ftc_reconstruct, riesz_potential_field)
from src.core.fredholm_solver import (INCOMPATIBLE, UNIQUE, assemble, kernel_dimension_check,
                                      solve, spectrum)
from src.core.grid_spectral import Box, Domain
from src.core.measure_mu import dirac, mixed_local_nonlocal
from src.core.profiles import SmoothBump, canonical_family
from src.core.special_functions import (fourier_symbol_integral, grad_constant, riesz_constant,
                                        sinc_moment, sinc_moment_panels, sphere_moment,
                                        unit_ball_volume)
from src.core.variational import FormContext, coercivity_certificate, continuity_certificate
from src.utils.utils import canonical_json

logger = logging.getLogger(__name__)

COLUMNS = ["rule", "probe", "params", "lhs", "rhs", "ratio", "pass", "level"]

_RULES_DIR = os.path.abspath(os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "rules"))
SUITES = {
    "all": os.path.join(_RULES_DIR, "verification_rules.toml"),
    "quick": os.path.join(_RULES_DIR, "example_custom_rules.toml"),
}


def load_rules_config(path: Optional[str] = None) -> Dict[str, Any]:
    """
    读取验证规则; 文件缺失或无法解析时退回 get_default_rules()

    Args:
        path: 规则文件, 默认读取 NONLOCAL_FREDHOLM_RULES
    """
    path = os.path.abspath(path or config.rules_path)
    if not os.path.exists(path):
        logger.warning("rules file %s not found, using default rules", path)
        return get_default_rules()
    try:
        with open(path, "r", encoding="utf-8") as f:
            rules = toml.load(f)
    except (OSError, toml.TomlDecodeError) as e:
        logger.warning("failed to read rules file %s (%s), using default rules", path, e)
        return get_default_rules()
    logger.info("loaded %d rules from %s", len(rules.get("rules", {})), path)
    return rules


def get_default_rules() -> Dict[str, Any]:
    """最小的内置规则集"""
    return {
        "general": {"suite": "default", "enabled": True},
        "rules": {
            "constants_identity": {"id": "V101", "enabled": True, "level": "error", "tolerance": 1e-10},
            "constants_limit": {"id": "V102", "enabled": True, "level": "error", "tolerance": 0.01},
            "riesz_composition": {"id": "V304", "enabled": True, "level": "error", "tolerance": 1e-6,
                                  "N": 256},
            "ftc_roundtrip": {"id": "V305", "enabled": True, "level": "error", "tolerance": 1e-5, "N": 8192},
            "weighted_holder": {"id": "V402", "enabled": True, "level": "error", "N": 512},
        },
    }


@dataclass
class VerificationResult:
    rows: List[Dict[str, Any]] = field(default_factory=list)

    @property
    def failures(self) -> List[Dict[str, Any]]:
        return [r for r in self.rows if r["level"] == "error" and not r["pass"]]

    @property
    def ok(self) -> bool:
        return not self.failures


def _row(rule: Dict[str, Any], probe: str, params: Dict[str, Any], lhs: float, rhs: float,
         passed: bool, ratio: Optional[float] = None) -> Dict[str, Any]:
    if ratio is None:
        ratio = lhs / rhs if rhs not in (0, 0.0) and np.isfinite(rhs) else float("nan")
    return {"rule": rule.get("id", ""), "probe": probe, "params": canonical_json(params),
            "lhs": float(lhs), "rhs": float(rhs), "ratio": float(ratio), "pass": bool(passed),
            "level": rule.get("level", "error")}


def _unit_domain(n: int) -> Domain:
    return Domain("interval" if n == 1 else "ball", 1.0)


def _family(n: int, rule: Dict[str, Any]) -> List[SmoothBump]:
    return canonical_family(n, _unit_domain(n))[: int(rule.get("family_size", 10))]


# -- constants ----------------------------------------------------------------------

def check_constants_identity(rule, seed):
    tol = float(rule.get("tolerance", 1e-10))
    rows = []
    for n in (1, 2, 3):
        for s in np.round(np.linspace(0.1, 0.9, 9), 10):
            lhs = grad_constant(float(s), n) * riesz_constant(1.0 - float(s), n)
            rhs = n + float(s) - 1.0
            rows.append(_row(rule, "constants_identity", {"n": n, "s": float(s)}, lhs, rhs,
                             abs(lhs - rhs) <= tol * max(1.0, abs(rhs))))
    return rows


def check_constants_limit(rule, seed):
    tol = float(rule.get("tolerance", 0.01))
    s = float(rule.get("s", 0.999))
    rows = []
    for n in (1, 2, 3):
        lhs = grad_constant(s, n) / (1.0 - s)
        rhs = 1.0 / unit_ball_volume(n)
        rows.append(_row(rule, "constants_limit", {"n": n, "s": s}, lhs, rhs, abs(lhs / rhs - 1.0) <= tol))
    return rows


def _sphere_moment_quadrature(s, n):
    # angular integral of |ω_1|^{1+s}; n = 3 reduces to a polar-angle integral
    if n == 2:
        return 4.0 * scipy.integrate.quad(lambda t: math.cos(t) ** (1.0 + s), 0.0, 0.5 * math.pi,
                                          epsabs=1e-13, epsrel=1e-13)[0]
    return 4.0 * math.pi * scipy.integrate.quad(lambda c: c ** (1.0 + s), 0.0, 1.0,
                                                epsabs=1e-13, epsrel=1e-13)[0]


def check_symbol_integral(rule, seed):
    tol = float(rule.get("tolerance", 1e-8))
    rng = np.random.default_rng(seed)
    rows = []
    for s in (0.3, 0.5, 0.7):
        lhs, rhs = sinc_moment_panels(s), sinc_moment(s)
        rows.append(_row(rule, "sinc_moment", {"s": s}, lhs, rhs, abs(lhs - rhs) <= tol))
        for n in (2, 3):
            lhs, rhs = _sphere_moment_quadrature(s, n), sphere_moment(s, n)
            rows.append(_row(rule, "sphere_moment", {"s": s, "n": n}, lhs, rhs, abs(lhs - rhs) <= tol))
        for n in (1, 2, 3):
            xi = rng.normal(size=n)
            j = int(rng.integers(n))
            lhs = fourier_symbol_integral(xi, s, j)
            rhs = sphere_moment(s, n) * sinc_moment(s) * float(np.linalg.norm(xi)) ** (s - 1.0) * xi[j]
            rows.append(_row(rule, "fourier_symbol_integral", {"s": s, "n": n, "j": j}, lhs, rhs,
                             abs(lhs - rhs) <= tol * max(1.0, abs(rhs))))
    return rows


# -- fractional gradient ------------------------------------------------------------

def check_symbol_cross(rule, seed):
    tol = float(rule.get("tolerance", 1e-4))
    rows = []
    rng = np.random.default_rng(seed)
    settings = {1: (32.0, 8192), 2: (8.0, 2048)}
    for n in rule.get("dimensions", [1, 2]):
        L, N = settings[int(n)]
        box = Box(int(n), L, int(rule.get(f"N{n}", N)))
        bumps = sorted(canonical_family(int(n), _unit_domain(int(n))), key=lambda b: -b.radius)
        for k, bump in enumerate(bumps[: int(rule.get("bumps", 5))]):
            u = bump.sample(box)
            inside = np.flatnonzero(np.linalg.norm(box.points - np.asarray(bump.center), axis=-1) < bump.radius)
            picks = box.points[rng.choice(inside, size=min(int(rule.get("points", 20)), inside.size), replace=False)]
            for s in rule.get("orders", [0.3, 0.5, 0.8]):
                spectral = frac_gradient_spectral(u, float(s))
                worst, scale = 0.0, 0.0
                for x in picks:
                    spec = QuadratureSpec(truncation_radius=float(np.linalg.norm(x)) + bump.support_radius + 1.5)
                    q = frac_gradient_quadrature(bump, float(s), x, spec)
                    worst = max(worst, float(np.max(np.abs(spectral.value_at(x) - q))))
                    scale = max(scale, float(np.max(np.abs(q))))
                rows.append(_row(rule, "symbol_cross", {"n": int(n), "s": float(s), "bump": k},
                                 worst, scale, worst <= tol * scale))
    return rows


def check_s_to_one(rule, seed):
    box = Box(1, 8.0, int(rule.get("N", 1024)))
    rows = []
    for k, bump in enumerate(_family(1, rule)[:3]):
        u = bump.sample(box)
        du = classical_gradient(u)
        ref = du.lp_norm(np.inf)
        errors = [(frac_gradient_spectral(u, s) - du).lp_norm(np.inf) for s in (0.9, 0.99, 0.999)]
        decreasing = errors[0] > errors[1] > errors[2]
        for s, e in zip((0.9, 0.99, 0.999), errors):
            ok = decreasing and (s != 0.999 or e <= 0.01 * ref)
            rows.append(_row(rule, "s_to_one", {"s": s, "bump": k}, e, ref, ok))
    return rows


def check_decay(rule, seed):
    rows = []
    bump = SmoothBump((0.0,), 1.0, 1.0)
    for s in rule.get("orders", [0.3, 0.5, 0.8]):
        points = [[m * bump.support_radius] for m in (4.0, 6.0, 8.0, 12.0)]
        report = decay_check(bump, float(s), points)
        for dist, value, bound, ratio in report.rows:
            rows.append(_row(rule, "decay_bound", {"s": float(s), "r": dist}, value, bound, ratio <= 1.0, ratio))
        target = -(1.0 + float(s))
        rows.append(_row(rule, "decay_slope", {"s": float(s)}, report.slope, target,
                         abs(report.slope - target) <= float(rule.get("slope_tolerance", 0.05))))
    return rows


def check_riesz_composition(rule, seed):
    tol = float(rule.get("tolerance", 1e-6))
    rows = []
    for n, N in ((1, int(rule.get("N", 256))), (2, int(rule.get("N2", 64)))):
        box = Box(n, 8.0, N)
        u = canonical_family(n, _unit_domain(n))[0].sample(box)
        for s, s_bar in ((0.8, 0.4), (0.6, 0.3), (0.9, 0.45)):
            lhs = frac_gradient_spectral(u, s_bar).array
            rhs = riesz_potential_field(frac_gradient_spectral(u, s), s - s_bar).array
            err = float(np.linalg.norm(lhs - rhs)) / float(np.linalg.norm(lhs))
            rows.append(_row(rule, "riesz_composition", {"n": n, "s": s, "s_bar": s_bar}, err, tol, err <= tol))
    return rows


def check_ftc_roundtrip(rule, seed):
    tol = float(rule.get("tolerance", 1e-5))
    box = Box(1, 8.0, int(rule.get("N", 8192)))
    omega = _unit_domain(1)
    rows = []
    for k, bump in enumerate(_family(1, rule)[:3]):
        u = bump.sample(box)
        for s in (0.3, 0.5, 0.7):
            rec = ftc_reconstruct(frac_gradient_spectral(u, s), s)
            err = (rec - u).lp_norm(np.inf, omega.mask(box))
            rows.append(_row(rule, "ftc_roundtrip", {"s": s, "bump": k}, err, tol, err <= tol))
    return rows


# -- inequalities -------------------------------------------------------------------

def check_tail(rule, seed):
    box = Box(1, float(rule.get("L", 32.0)), int(rule.get("N", 2048)))
    omega = _unit_domain(1)
    R = float(rule.get("R_factor", 8.0)) * omega.diameter(1)
    rows = []
    for k, bump in enumerate(_family(1, rule)):
        u = bump.sample(box)
        for s in rule.get("orders", [0.5]):
            for p in rule.get("exponents", [2.0]):
                rep = probes.tail_probe(u, float(s), float(p), R)
                ok = rep.passed if rep.asserted else True
                rows.append(_row(rule, "tail", {"s": float(s), "p": float(p), "R": R, "bump": k,
                                                "asserted": rep.asserted}, rep.lhs, 2.0 * rep.rhs, ok))
    return rows


def check_weighted_holder(rule, seed):
    box = Box(1, 8.0, int(rule.get("N", 512)))
    omega = _unit_domain(1)
    h = box.sample(lambda X: np.abs(X[:, 0]) ** 0.5)
    rows = []
    for k, bump in enumerate(_family(1, rule)):
        rep = probes.weighted_holder_probe(bump.sample(box), h, 1.0, 2.0, omega)
        rows.append(_row(rule, "weighted_holder", {"t": 1.0, "p": 2.0, "bump": k}, rep.lhs, rep.rhs, rep.passed))
    return rows


def _recorded(rule, name, reports, params_list):
    return [_row(rule, name, params, rep.lhs, rep.rhs, np.isfinite(rep.ratio))
            for rep, params in zip(reports, params_list)]


def check_poincare(rule, seed):
    box = Box(1, 8.0, int(rule.get("N", 1024)))
    omega = _unit_domain(1)
    reports, params = [], []
    for s in rule.get("orders", [0.2, 0.5, 0.9]):
        batch = [probes.poincare_probe(b.sample(box), float(s), 2.0, omega) for b in _family(1, rule)]
        reports.append(batch[0])
        params.append({"s": float(s), "p": 2.0, "sup_ratio_times_s": probes.family_constant(batch) * float(s)})
    return _recorded(rule, "poincare", reports, params)


def check_order_comparison(rule, seed):
    omega = _unit_domain(1)
    bump = _family(1, rule)[0]
    rows = []
    for s_bar, s in ((0.3, 0.7), (0.5, 0.9)):
        for p in (1.0, 2.0, 4.0):
            coarse = probes.order_comparison_probe(bump.sample(Box(1, 8.0, 512)), s_bar, s, p)
            fine = probes.order_comparison_probe(bump.sample(Box(1, 8.0, 1024)), s_bar, s, p)
            drift = abs(fine.ratio / coarse.ratio - 1.0)
            rows.append(_row(rule, "order_comparison", {"s_bar": s_bar, "s": s, "p": p, "drift": drift},
                             fine.lhs, fine.rhs, drift <= 0.05))
    return rows


def check_grad_control(rule, seed):
    box = Box(1, 8.0, int(rule.get("N", 1024)))
    omega = _unit_domain(1)
    reports, params = [], []
    for s in (0.1, 0.5, 1.0):
        rep = probes.grad_control_probe(_family(1, rule)[0].sample(box), s, 2.0, omega)
        reports.append(rep)
        params.append({"s": s, "p": 2.0})
    return _recorded(rule, "grad_control", reports, params)


# -- variational certificates -------------------------------------------------------

def _nonsymmetric_context(rule) -> FormContext:
    box = Box(1, 8.0, int(rule.get("N", 256)))
    cs = identity(1, a=LowerOrder("linear", (1.0,)), b=LowerOrder("constant", (1.0,)), a0=1.0)
    mu = mixed_local_nonlocal([0.6], 0.5)
    return FormContext(mu, cs, _unit_domain(1), box)


def check_certificates(rule, seed):
    ctx = _nonsymmetric_context(rule)
    family = [b.sample(ctx.box) for b in _family(1, rule)]
    rows = []
    for k, u in enumerate(family):
        rec = coercivity_certificate(u, ctx)
        rows.append(_row(rule, "coercivity", {"bump": k, "sigma0": rec.sigma0},
                         rec.form_value, rec.lower_bound, rec.holds))
        v = family[(k + 1) % len(family)]
        cont = continuity_certificate(u, v, ctx)
        rows.append(_row(rule, "continuity", {"pair": [k, (k + 1) % len(family)], "constant": cont.constant},
                         abs(cont.value), cont.bound, cont.holds))
    return rows


# -- Fredholm -----------------------------------------------------------------------

def check_fredholm(rule, seed):
    ctx = _nonsymmetric_context(rule)
    system = assemble(ctx)
    report = spectrum(system)
    top = report.values[-3:]
    rows = []
    if not top:
        logger.warning("no generalized eigenvalues below sigma0=%.6g; trichotomy sweep skipped", report.sigma0)
        return rows
    lo, hi = min(top) - 1.0, max(top) + 1.0
    sweep = sorted(set(np.linspace(lo, hi, int(rule.get("sweep", 200))).tolist()) | set(top))
    rng = np.random.default_rng(seed)
    for sigma in sweep:
        d, d_star = kernel_dimension_check(system, sigma)
        res = solve(system, sigma, rng.normal(size=system.size))
        ok = (res.status == UNIQUE) == (d == 0) and d == d_star
        rows.append(_row(rule, "trichotomy", {"sigma": sigma, "d": d, "d_star": d_star, "status": res.status},
                         d, d_star, ok))
    for sigma in top:
        U, S, _ = np.linalg.svd(system.shifted(sigma))
        adjoint = U[:, S <= system.tolerance]
        T = rng.normal(size=system.size)
        T = T - adjoint @ (adjoint.T @ T)
        res = solve(system, sigma, T)
        rows.append(_row(rule, "compatible_solve", {"sigma": sigma, "status": res.status},
                         res.residual, 1e-8, res.status != INCOMPATIBLE and res.residual <= 1e-8))
        if adjoint.shape[1]:
            bad = solve(system, sigma, adjoint[:, 0])
            rows.append(_row(rule, "incompatible_solve", {"sigma": sigma, "status": bad.status},
                             max(bad.compatibility_defects), 0.0, bad.status == INCOMPATIBLE))
    return rows


def spectral_stiffness(box: Box, basis: np.ndarray) -> np.ndarray:
    """周期谱微分矩阵 D 给出的 h·D_Bᵀ D_B (μ = δ(1), A = I, n = 1)"""
    N, L = box.points_per_axis, box.half_width
    k = np.arange(N)
    diff = k[:, None] - k[None, :]
    with np.errstate(divide="ignore"):
        D = (math.pi / L) * 0.5 * (-1.0) ** diff / np.tan(math.pi * diff / N)
    D[diff == 0] = 0.0
    DB = D[:, basis]
    return box.spacing * DB.T @ DB


def check_trudinger(rule, seed):
    omega = _unit_domain(1)
    rows = []
    coarse = int(rule.get("N", 256))
    for N in (coarse, 2 * coarse):
        ctx = FormContext(dirac(1.0), identity(1), omega, Box(1, 8.0, N))
        system = assemble(ctx)
        ref = spectral_stiffness(ctx.box, system.basis)
        diff = float(np.linalg.norm(system.K - ref)) / float(np.linalg.norm(ref))
        rows.append(_row(rule, "trudinger_stiffness", {"N": N}, diff, 1e-6, diff <= 1e-6))
        h = ctx.box.spacing
        lam = float(np.linalg.eigvalsh(0.5 * (system.K + system.K.T))[0]) / h
        x = ctx.box.points[system.basis, 0]
        ell = x[-1] - x[0] + 2.0 * h
        exact = (math.pi / ell) ** 2
        ok = N == coarse or abs(lam / exact - 1.0) <= 0.05
        rows.append(_row(rule, "trudinger_eigenvalue", {"N": N}, lam, exact, ok))
    return rows


def check_noncompact_scaling(rule, seed):
    box = Box(2, float(rule.get("L", 8.0)), int(rule.get("N", 1024)))
    phi = SmoothBump((0.0, 0.0), 1.0, 1.0)
    lambdas = tuple(rule.get("lambdas", [1, 2, 4, 8, 16]))
    sweep = probes.noncompact_sweep(phi, box, float(rule.get("s_bar", 0.5)), lambdas)
    rows = []
    k = sweep.k_values
    for i, row in enumerate(sweep.rows):
        rows.append(_row(rule, "scaling_sweep", {"lambda": row["lambda"], "eps0": sweep.eps0},
                         row["K"], k[0], i == 0 or k[i] >= k[i - 1]))
    rows.append(_row(rule, "scaling_growth", {"lambdas": [r["lambda"] for r in sweep.rows]},
                     sweep.growth, 10.0, sweep.growth > 10.0))

    # resolving φ_λ at λ = 16 to these tolerances needs a grid only affordable in 1D
    line = Box(1, float(rule.get("identity_L", 256.0)), int(rule.get("identity_N", 2 ** 20)))
    s_bar = float(rule.get("identity_s_bar", 0.4))
    for lam in lambdas:
        rec = probes.scaling_family(SmoothBump((0.0,), 1.0, 1.0), float(lam), 0.5, s_bar, line)
        for name, value, limit in (("scaling_gradient", rec.gradient_residual, 1e-5),
                                   ("scaling_seminorm", rec.seminorm_drift, 1e-2),
                                   ("scaling_l1", rec.l1_residual, 1e-8)):
            rows.append(_row(rule, name, {"lambda": float(lam), "n": 1, "s_bar": s_bar},
                             value, limit, bool(value <= limit)))
    return rows


CHECKS: Dict[str, Callable[[Dict[str, Any], int], List[Dict[str, Any]]]] = {
    "constants_identity": check_constants_identity,
    "constants_limit": check_constants_limit,
    "symbol_integral": check_symbol_integral,
    "symbol_cross": check_symbol_cross,
    "s_to_one": check_s_to_one,
    "decay": check_decay,
    "riesz_composition": check_riesz_composition,
    "ftc_roundtrip": check_ftc_roundtrip,
    "tail": check_tail,
    "weighted_holder": check_weighted_holder,
    "poincare": check_poincare,
    "order_comparison": check_order_comparison,
    "grad_control": check_grad_control,
    "certificates": check_certificates,
    "fredholm": check_fredholm,
    "trudinger": check_trudinger,
    "noncompact_scaling": check_noncompact_scaling,
}


def run_suite(rules: Dict[str, Any], seed: int = 7) -> VerificationResult:
    """按规则顺序执行所有启用的检查"""
    result = VerificationResult()
    for name, rule in rules.get("rules", {}).items():
        if not rule.get("enabled", True):
            continue
        check = CHECKS.get(name)
        if check is None:
            logger.warning("unknown verification rule %s, skipped", name)
            continue
        rows = check(rule, seed)
        logger.info("rule %s (%s): %d rows, %d failed", rule.get("id", "?"), name, len(rows),
                    sum(1 for r in rows if not r["pass"]))
        result.rows.extend(rows)
    return result
