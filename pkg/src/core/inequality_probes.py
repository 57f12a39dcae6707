# inequality_probes.py
"""
不等式的数值探针: 在具体函数上计算两边, 报告比值。

常数显式给出的不等式 (尾部因子 2、加权 Hölder) 会被断言; 常数只是
存在性的不等式只记录经验上确界, 不与任何自造常数比较。
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from src.core.coefficients import boundedness_probe, p_delta
from src.core.errors import DomainError, PreconditionError, ResolutionError
from src.core.fractional_calculus import classical_gradient, frac_gradient_spectral
from src.core.grid_spectral import Box, Domain, GridFunction, supported_in

logger = logging.getLogger(__name__)

TAIL_MARGIN = 0.10
HOLDER_SLACK = 1e-9
MIN_RESOLVED_CELLS = 8


@dataclass
class ProbeReport:
    """
    一次探针的结果

    Attributes:
        probe: 探针名
        lhs, rhs: 不等式两边
        ratio: lhs/rhs; rhs = 0 时为 nan 且 degenerate 为真
        parameters: (s, p, R, ...)
        asserted: 该不等式是否被断言
        passed: 断言结果; 仅记录的探针为 None
        extra: 附加量 (尾部比例等)
    """

    probe: str
    lhs: float
    rhs: float
    parameters: Dict[str, Any] = field(default_factory=dict)
    asserted: bool = False
    passed: Optional[bool] = None
    extra: Dict[str, float] = field(default_factory=dict)

    @property
    def degenerate(self) -> bool:
        return not self.rhs > 0

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs if self.rhs > 0 else float("nan")


def _ball_mask(box: Box, R: float) -> np.ndarray:
    return box.radius < R


def poincare_probe(u: GridFunction, s: float, p: float, omega: Domain) -> ProbeReport:
    """‖u‖_{L^p(Ω)} 对 ‖D^s u‖_{L^p(R^n)}"""
    if p < 1:
        raise DomainError(f"p must be >= 1, got {p}")
    if not supported_in(u, omega):
        raise PreconditionError("u is not supported in Ω")
    lhs = u.lp_norm(p, omega.mask(u.box))
    rhs = frac_gradient_spectral(u, s).lp_norm(p)
    return ProbeReport("poincare", lhs, rhs, {"s": s, "p": p})


def family_constant(reports: Sequence[ProbeReport], weight: Callable[[ProbeReport], float] = lambda r: 1.0) -> float:
    """sup(ratio·weight) over the non-degenerate reports"""
    values = [r.ratio * weight(r) for r in reports if not r.degenerate]
    return max(values, default=float("nan"))


def _tail_split(u: GridFunction, s: float, p: float, R: float):
    mag = frac_gradient_spectral(u, s).magnitude()
    inside = _ball_mask(u.box, R)
    total = mag.lp_norm(p)
    local = mag.lp_norm(p, inside)
    if np.isinf(p):
        outside = mag.lp_norm(p, ~inside)
        fraction = outside / total if total > 0 else 0.0
    else:
        fraction = 1.0 - (local / total) ** p if total > 0 else 0.0
    return total, local, max(fraction, 0.0)


def calibrate_tail_threshold(u: GridFunction, s: float, p: float, R_min: Optional[float] = None,
                             iterations: int = 40) -> float:
    """
    二分求使 2‖D^s u‖_{L^p(B_R)} ≥ 1.1‖D^s u‖_{L^p} 的最小 R, 返回 s²R^s

    Raises:
        PreconditionError: 在整个盒子内都达不到 10% 余量
    """
    box = u.box
    hi = box.half_width
    lo = R_min if R_min is not None else box.spacing

    def margin(R):
        total, local, _ = _tail_split(u, s, p, R)
        return 2.0 * local / total - 1.0 if total > 0 else float("inf")

    if margin(hi) < TAIL_MARGIN:
        raise PreconditionError(f"tail margin below {TAIL_MARGIN:.0%} even at R = box half-width {hi}")
    if margin(lo) >= TAIL_MARGIN:
        hi = lo
    for _ in range(iterations):
        if hi - lo <= 1e-6 * hi:
            break
        mid = 0.5 * (lo + hi)
        if margin(mid) >= TAIL_MARGIN:
            hi = mid
        else:
            lo = mid
    threshold = s ** 2 * hi ** s
    logger.debug("tail threshold calibrated at R=%.4g (s=%.3g, p=%.3g): %.4g", hi, s, p, threshold)
    return threshold


def tail_probe(u: GridFunction, s: float, p: float, R: float, threshold: Optional[float] = None) -> ProbeReport:
    """
    ‖D^s u‖_{L^p(R^n)} ≤ 2‖D^s u‖_{L^p(B_R)}, 在 s²R^s 超过阈值时断言

    Args:
        threshold: 阈值常数; 默认对 u 本身二分校准
    """
    if threshold is None:
        threshold = calibrate_tail_threshold(u, s, p)
    total, local, fraction = _tail_split(u, s, p, R)
    precondition = s ** 2 * R ** s > threshold
    report = ProbeReport("tail", total, local, {"s": s, "p": p, "R": R},
                         asserted=precondition, extra={"tail_fraction": fraction, "threshold": threshold})
    report.passed = total <= 2.0 * local * (1.0 + 1e-12) if precondition else None
    if not precondition:
        logger.warning("tail probe precondition s²R^s=%.4g <= %.4g; recorded, not asserted",
                       s ** 2 * R ** s, threshold)
    return report


def order_comparison_probe(u: GridFunction, s_bar: float, s: float, p: float) -> ProbeReport:
    """‖D^{s̄}u‖_p 对 ‖D^s u‖_p, 0 < s̄ ≤ s ≤ 1"""
    if not 0.0 < s_bar <= s <= 1.0:
        raise DomainError(f"need 0 < s_bar <= s <= 1, got s_bar={s_bar}, s={s}")
    lhs = frac_gradient_spectral(u, s_bar).lp_norm(p)
    rhs = lhs if s_bar == s else frac_gradient_spectral(u, s).lp_norm(p)
    return ProbeReport("order_comparison", lhs, rhs, {"s_bar": s_bar, "s": s, "p": p})


def grad_control_probe(u: GridFunction, s: float, p: float, omega: Domain) -> ProbeReport:
    """‖D^s u‖_{L^p(R^n)} 对 ‖Du‖_{L^p(Ω)}"""
    lhs = frac_gradient_spectral(u, s).lp_norm(p)
    rhs = classical_gradient(u).lp_norm(p, omega.mask(u.box))
    return ProbeReport("grad_control", lhs, rhs, {"s": s, "p": p})


def weighted_holder_probe(u: GridFunction, h: GridFunction, t: float, p: float, omega: Domain) -> ProbeReport:
    """
    ‖u‖_{L^{pt/(t+1)}(Ω)} ≤ ‖h^{-1}‖^{1/p}_{L^t(Ω)} ‖u‖_{L^p(h,Ω)}

    h = 0 的格点不计入两边 (本质上确界语义的近似)。

    Raises:
        PreconditionError: p < (t+1)/t 或 h 取负值
    """
    if np.any(h.values < 0):
        raise PreconditionError("weight h must be nonnegative")
    floor = 1.0 if np.isinf(t) else (t + 1.0) / t
    if p < floor:
        raise PreconditionError(f"need p >= (t+1)/t = {floor:.6g}, got p={p}")
    mask = omega.mask(u.box) & (h.values > 0)
    q = p if np.isinf(t) else p * t / (t + 1.0)
    inv = GridFunction(h.box, np.where(h.values > 0, 1.0 / np.where(h.values > 0, h.values, 1.0), 0.0))
    lhs = u.lp_norm(q, mask)
    weighted = GridFunction(u.box, h.values * np.abs(u.values) ** p).integral(mask) ** (1.0 / p)
    rhs = inv.lp_norm(t, mask) ** (1.0 / p) * weighted
    report = ProbeReport("weighted_holder", lhs, rhs, {"t": t, "p": p}, asserted=True)
    report.passed = lhs <= rhs * (1.0 + HOLDER_SLACK) + 1e-300
    return report


# -- scaling family -----------------------------------------------------------------

def critical_exponent(n: int, s_bar: float) -> float:
    """p(δ) = 2n/(n + 2s̄), δ = (n - 2s̄)/(2s̄)"""
    return 2.0 * n / (n + 2.0 * s_bar)


def seminorm(u: GridFunction, s_bar: float) -> float:
    """‖D^{s̄}u‖_{L^{p(δ)}}"""
    return frac_gradient_spectral(u, s_bar).lp_norm(critical_exponent(u.box.n, s_bar))


@dataclass
class ScalingRecord:
    lam: float
    alpha: float
    member: GridFunction
    critical_member: GridFunction
    gradient_residual: float
    seminorm_drift: float
    l1_residual: float

    @property
    def identities_hold(self) -> bool:
        return self.gradient_residual <= 1e-5 and self.seminorm_drift <= 1e-2 and self.l1_residual <= 1e-8


def _support_cells(phi, box: Box, lam: float) -> float:
    radius = getattr(phi, "support_radius", box.half_width)
    return 2.0 * radius / lam / box.spacing


def _shared_node_residual(scaled: GridFunction, base: GridFunction, lam: float, alpha: float,
                          s_bar: float, reach: float) -> float:
    # D^{s̄}φ_{λ,α} at node offset j against λ^{α+s̄} D^{s̄}φ at offset λj, for |λj·h| ≤ reach;
    # farther out the periodic images of the slowly decaying D^{s̄}φ dominate the comparison
    k = int(round(lam))
    if abs(lam - k) > 1e-12:
        return float("nan")
    box = base.box
    c = box.points_per_axis // 2
    offsets = np.arange(-(c // k), (box.points_per_axis - 1 - c) // k + 1)
    offsets = offsets[np.abs(k * offsets) * box.spacing <= reach]
    near = np.ix_(*([c + offsets] * box.n))
    far = np.ix_(*([c + k * offsets] * box.n))
    lhs = frac_gradient_spectral(scaled, s_bar).array[(slice(None),) + near]
    rhs = lam ** (alpha + s_bar) * frac_gradient_spectral(base, s_bar).array[(slice(None),) + far]
    return float(np.max(np.abs(lhs - rhs))) / max(float(np.max(np.abs(rhs))), 1e-300)


def _window(box: Box, lam: float) -> np.ndarray:
    # nodes of [-L/(2λ), L/(2λ))^n, the image of the inner half box under x -> x/λ
    edge = 0.5 * box.half_width / lam
    tol = 1e-9 * box.spacing
    return np.logical_and.reduce([(m >= -edge - tol) & (m < edge - tol) for m in box.mesh])


def scaling_family(phi: Callable, lam: float, alpha: float, s_bar: float, box: Box,
                   fixed_box: bool = True) -> ScalingRecord:
    """
    φ_{λ,α}(x) = λ^α φ(λx) 以及三个缩放恒等式

    默认所有成员都在同一个盒子上取样:
      (i) 在 λx 落在 φ 支撑球内的共享节点上比较 D^{s̄}φ_{λ,α}(x) 与 λ^{α+s̄} D^{s̄}φ(λx),
          λ 非整数时为 nan;
      (ii) φ_{λ,ᾱ} 在窗口 [-L/(2λ), L/(2λ))^n 上的半范数与 φ 在 [-L/2, L/2)^n 上的比较;
      (iii) ‖φ_{λ,ᾱ}‖_{L¹} 与 λ^{-n/2}‖φ‖_{L¹} 比较。
    残差因此包含周期化与分辨率误差。fixed_box 为假时在收缩 λ 倍的盒子上取样,
    离散化恰是 φ 的离散化的伸缩, 三个恒等式退化为舍入误差。

    Raises:
        DomainError: λ ∉ [1, 64] 或 s̄ ∉ (0, 1)
        ResolutionError: 固定盒子上缩放后的支撑不足 8 个格点
    """
    if not 1.0 <= lam <= 64.0:
        raise DomainError(f"lambda must lie in [1, 64], got {lam}")
    if not 0.0 < s_bar < 1.0:
        raise DomainError(f"s_bar must lie in (0, 1), got {s_bar}")
    n = box.n
    alpha_bar = 0.5 * n
    target = box
    if fixed_box:
        cells = _support_cells(phi, box, lam)
        if cells < MIN_RESOLVED_CELLS:
            raise ResolutionError(f"scaled profile spans {cells:.1f} cells at lambda={lam}, need {MIN_RESOLVED_CELLS}")
    else:
        target = box.contracted(lam)

    def member(a):
        return target.sample(lambda X: lam ** a * phi(lam * X))

    base = box.sample(phi)
    scaled = member(alpha)
    critical = member(alpha_bar)

    if fixed_box:
        reach = getattr(phi, "support_radius", 0.5 * box.half_width)
        grad_residual = _shared_node_residual(scaled, base, lam, alpha, s_bar, reach)
        p = critical_exponent(n, s_bar)
        base_semi = frac_gradient_spectral(base, s_bar).lp_norm(p, _window(box, 1.0))
        critical_semi = frac_gradient_spectral(critical, s_bar).lp_norm(p, _window(box, lam))
    else:
        lhs = frac_gradient_spectral(scaled, s_bar).array
        rhs = lam ** (alpha + s_bar) * frac_gradient_spectral(base, s_bar).array
        grad_residual = float(np.max(np.abs(lhs - rhs))) / max(float(np.max(np.abs(rhs))), 1e-300)
        base_semi = seminorm(base, s_bar)
        critical_semi = seminorm(critical, s_bar)

    drift = abs(critical_semi - base_semi) / max(base_semi, 1e-300)
    base_l1 = base.lp_norm(1.0)
    expected = lam ** (-0.5 * n) * base_l1
    l1_residual = abs(critical.lp_norm(1.0) - expected) / max(expected, 1e-300)
    return ScalingRecord(lam, alpha, scaled, critical, grad_residual, drift, l1_residual)


@dataclass
class SweepRecord:
    """K_{ε₀}(λ) 的 λ 扫描"""

    s_bar: float
    delta: float
    p: float
    M: float
    eps0: float
    rows: List[Dict[str, float]] = field(default_factory=list)

    @property
    def k_values(self) -> List[float]:
        return [r["K"] for r in self.rows]

    @property
    def growth(self) -> float:
        k = self.k_values
        return k[-1] / k[0] if k and k[0] > 0 else float("inf")


def noncompact_sweep(phi: Callable, box: Box, s_bar: float, lambdas: Sequence[float] = (1, 2, 4, 8, 16),
                     f_value: float = 1.0, fixed_box: bool = True) -> SweepRecord:
    """
    临界情形 μ = δ(s̄), A = I, f ≡ f_value 下的 λ 扫描

    族成员按 L²(f) 归一化, M = ‖φ̃‖_{H⁰}(与 λ 无关), ε₀ = 1/(2M²);
    K_{ε₀}(λ) 是尺度不超过 λ 的成员所需的最小常数。
    默认所有成员共用 box, 最大的 λ 必须让支撑至少覆盖 8 个格点。
    """
    n = box.n
    delta = (n - 2.0 * s_bar) / (2.0 * s_bar)
    p = p_delta(delta)
    records = [scaling_family(phi, lam, 0.5 * n, s_bar, box, fixed_box) for lam in lambdas]

    def normalized(rec):
        u = rec.critical_member
        f = GridFunction(u.box, np.full(u.box.shape, f_value))
        return u * (1.0 / math.sqrt((f * u * u).integral())), f

    first, _ = normalized(records[0])
    M = seminorm(first, s_bar)
    eps0 = 1.0 / (2.0 * M ** 2)
    sweep = SweepRecord(s_bar, delta, p, M, eps0)
    running = 0.0
    for rec in records:
        u, f = normalized(rec)
        probe = boundedness_probe(f, None, [u], lambda v: seminorm(v, s_bar), eps_values=(eps0,))
        running = max(running, probe.k_eps[eps0])
        sweep.rows.append({
            "lambda": rec.lam, "K": running, "seminorm": seminorm(u, s_bar), "l1": u.lp_norm(1.0),
            "gradient_residual": rec.gradient_residual, "seminorm_drift": rec.seminorm_drift,
            "l1_residual": rec.l1_residual,
        })
    logger.info("non-compact sweep: K grows by %.3g over lambda in %s", sweep.growth, tuple(lambdas))
    return sweep
