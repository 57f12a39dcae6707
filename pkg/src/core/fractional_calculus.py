# fractional_calculus.py
"""
分数阶梯度 D^s (谱方法与奇异积分求积两种实现)、Riesz 位势 I_α、
分数阶微积分基本定理以及相关恒等式的检验量。

谱方法: D^s_j 的符号为 i(2π)^s ξ_j |ξ|^{s-1}, I_α 的符号为 |2πξ|^{-α},
两者在 ξ = 0 处都取 0。
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import roots_legendre

from src.core.errors import DomainError, GridMismatchError, PreconditionError
from src.core.grid_spectral import Box, GridFunction, Multiplier, apply_symbol, forward, inverse
from src.core.special_functions import grad_constant, sphere_area

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class VectorField:
    """n 个分量共享同一个盒子的向量场"""

    box: Box
    components: Tuple[GridFunction, ...]

    def __post_init__(self):
        comps = tuple(self.components)
        if len(comps) != self.box.n:
            raise GridMismatchError(f"expected {self.box.n} components, got {len(comps)}")
        for c in comps:
            if c.box != self.box:
                raise GridMismatchError("all components must share one box")
        object.__setattr__(self, "components", comps)

    def __getitem__(self, j: int) -> GridFunction:
        return self.components[j]

    def __add__(self, other: "VectorField") -> "VectorField":
        return VectorField(self.box, tuple(a + b for a, b in zip(self.components, other.components)))

    def __sub__(self, other: "VectorField") -> "VectorField":
        return VectorField(self.box, tuple(a - b for a, b in zip(self.components, other.components)))

    def __mul__(self, scalar: float) -> "VectorField":
        return VectorField(self.box, tuple(c * scalar for c in self.components))

    __rmul__ = __mul__

    @property
    def array(self) -> np.ndarray:
        """形状 (n, N, ..., N) 的分量数组"""
        return np.stack([c.values for c in self.components])

    def magnitude(self) -> GridFunction:
        return GridFunction(self.box, np.sqrt(np.sum(self.array ** 2, axis=0)))

    def lp_norm(self, p: float, mask: Optional[np.ndarray] = None) -> float:
        return self.magnitude().lp_norm(p, mask)

    def value_at(self, point: Sequence[float]) -> np.ndarray:
        """取网格节点上的值; point 必须是网格点"""
        h = self.box.spacing
        idx = []
        for x in point:
            k = (x + self.box.half_width) / h
            if abs(k - round(k)) > 1e-9:
                raise PreconditionError(f"point {tuple(point)} is not a grid node (spacing {h})")
            idx.append(int(round(k)) % self.box.points_per_axis)
        return self.array[(slice(None),) + tuple(idx)]


@dataclass(frozen=True)
class QuadratureSpec:
    """
    奇异积分求积参数

    Attributes:
        truncation_radius: 截断半径 R
        core_radius: 奇异核半径 ε₀, 默认 1e-6·R
        radial_nodes: 每个径向面板的 Gauss-Legendre 节点数
        angular_nodes: 每个角度方向的节点数
        radial_panels: 径向面板数
    """

    truncation_radius: float
    core_radius: Optional[float] = None
    radial_nodes: int = 16
    angular_nodes: int = 48
    radial_panels: int = 32

    def __post_init__(self):
        if self.core_radius is None:
            object.__setattr__(self, "core_radius", 1e-6 * self.truncation_radius)
        if not 0.0 < self.core_radius < self.truncation_radius:
            raise PreconditionError(
                f"need 0 < core_radius < truncation_radius, got {self.core_radius}, {self.truncation_radius}")
        for name in ("radial_nodes", "angular_nodes"):
            if getattr(self, name) < 4:
                raise PreconditionError(f"{name} must be >= 4, got {getattr(self, name)}")
        if self.radial_panels < 1:
            raise PreconditionError(f"radial_panels must be >= 1, got {self.radial_panels}")


def _check_gradient_order(s: float) -> None:
    if not 0.0 < s <= 1.0:
        raise DomainError(f"gradient order must lie in (0, 1], got {s}")


def gradient_symbol(box: Box, s: float, j: int) -> np.ndarray:
    """D^s_j 的符号 i(2π)^s ξ_j |ξ|^{s-1}, ξ = 0 与轴 j 的 Nyquist 模式取 0"""
    xi_j = box.frequencies[j]
    norm = box.frequency_norm
    with np.errstate(divide="ignore", invalid="ignore"):
        radial = np.where(norm > 0, norm ** (s - 1.0), 0.0) if s != 1.0 else np.ones_like(norm)
    symbol = 1j * (2.0 * math.pi) ** s * xi_j * radial
    symbol[box.nyquist_masks[j]] = 0.0
    return symbol


def gradient_multiplier(s: float, j: int) -> Multiplier:
    def symbol(xi):
        norm = np.sqrt(sum(k ** 2 for k in xi))
        with np.errstate(divide="ignore", invalid="ignore"):
            radial = np.where(norm > 0, norm ** (s - 1.0), 0.0)
        return 1j * (2.0 * math.pi) ** s * xi[j] * radial
    return Multiplier(symbol, odd_axes=(j,))


def riesz_symbol(box: Box, alpha: float) -> np.ndarray:
    norm = box.frequency_norm
    with np.errstate(divide="ignore"):
        return np.where(norm > 0, (2.0 * math.pi * norm) ** (-alpha), 0.0).astype(complex)


def frac_gradient_spectral(u: GridFunction, s: float) -> VectorField:
    """
    谱方法计算 D^s u

    Args:
        u: 网格函数
        s: 阶数 s ∈ (0, 1]; s = 1 即经典梯度

    Returns:
        VectorField: n 个分量
    """
    _check_gradient_order(s)
    box = u.box
    return VectorField(box, tuple(apply_symbol(u, gradient_symbol(box, s, j)) for j in range(box.n)))


def classical_gradient(u: GridFunction) -> VectorField:
    return frac_gradient_spectral(u, 1.0)


def frac_divergence(v: VectorField, s: float) -> GridFunction:
    """Σ_i D^s_i v_i"""
    _check_gradient_order(s)
    box = v.box
    total = np.zeros(box.shape)
    for i in range(box.n):
        total += apply_symbol(v[i], gradient_symbol(box, s, i)).values
    return GridFunction(box, total)


def riesz_potential(u: GridFunction, alpha: float) -> GridFunction:
    """I_α u, 符号 |2πξ|^{-α}, 均值模式置零"""
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"riesz_potential requires alpha in (0, 1), got {alpha}")
    return apply_symbol(u, riesz_symbol(u.box, alpha))


def riesz_potential_field(v: VectorField, alpha: float) -> VectorField:
    return VectorField(v.box, tuple(riesz_potential(c, alpha) for c in v.components))


def _exterior_mask(box: Box) -> np.ndarray:
    return np.max(np.abs(np.stack(box.mesh)), axis=0) >= 0.5 * box.half_width


def ftc_reconstruct(Dsu: VectorField, s: float, exterior: Optional[np.ndarray] = None) -> GridFunction:
    """
    由 D^s u 重建 u

    在非零模式上对 D^s 的向量符号求逆, 常数由 u 在外层区域 (默认
    |x|_∞ ≥ L/2) 为零来确定。

    Args:
        Dsu: frac_gradient_spectral 的输出
        s: 阶数 s ∈ (0, 1)
        exterior: 可选的外层掩码, 须落在 u 的支撑之外

    Returns:
        GridFunction: 重建结果
    """
    if not 0.0 < s < 1.0:
        raise DomainError(f"ftc_reconstruct requires s in (0, 1), got {s}")
    box = Dsu.box
    numerator = np.zeros(box.shape, dtype=complex)
    denominator = np.zeros(box.shape)
    for j in range(box.n):
        m = gradient_symbol(box, s, j)
        numerator += np.conj(m) * forward(Dsu[j])
        denominator += np.abs(m) ** 2
    u_hat = np.where(denominator > 0, numerator / np.where(denominator > 0, denominator, 1.0), 0.0)
    values = inverse(u_hat, box).real
    mask = _exterior_mask(box) if exterior is None else exterior
    values = values - float(np.mean(values[mask]))
    return GridFunction(box, values)


def ftc_difference(Dsu: VectorField, s: float, x: Sequence[int], y: Sequence[int]) -> float:
    """u(y) - u(x), 由一次重建的两点差得到 (与常数无关)"""
    u = ftc_reconstruct(Dsu, s)
    return float(u.values[tuple(y)] - u.values[tuple(x)])


# -- singular-integral evaluation ------------------------------------------------

def half_sphere_rule(n: int, nodes: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    半球面上的方向与权重, 与对径点配对后覆盖整个 S^{n-1}

    n=1 为单点 +1; n=2 对 θ ∈ [0, π) 用 Gauss-Legendre;
    n=3 对 cosθ ∈ [-1, 1] 与 φ ∈ [0, π) 做张量 Gauss-Legendre。
    """
    if n == 1:
        return np.ones((1, 1)), np.ones(1)
    x, w = roots_legendre(nodes)
    if n == 2:
        theta = 0.5 * math.pi * (x + 1.0)
        return np.stack([np.cos(theta), np.sin(theta)], axis=-1), 0.5 * math.pi * w
    if n == 3:
        phi = 0.5 * math.pi * (x + 1.0)
        mu, phi = np.meshgrid(x, phi, indexing="ij")
        weights = np.outer(w, 0.5 * math.pi * w).ravel()
        st = np.sqrt(1.0 - mu ** 2)
        dirs = np.stack([st * np.cos(phi), st * np.sin(phi), mu], axis=-1).reshape(-1, 3)
        return dirs, weights
    raise DomainError(f"dimension n={n} not supported")


def _composite_nodes(panels: int, nodes: int) -> Tuple[np.ndarray, np.ndarray]:
    """[0, 1] 上的复合 Gauss-Legendre 节点与权重"""
    x, w = roots_legendre(nodes)
    edges = np.linspace(0.0, 1.0, panels + 1)
    left, width = edges[:-1, None], np.diff(edges)[:, None]
    t = (left + 0.5 * width * (x[None, :] + 1.0)).ravel()
    wt = (0.5 * width * w[None, :]).ravel()
    return t, wt


def grading_exponent(s: float) -> float:
    return min(max(2.0 / (1.0 - s), 2.0), 8.0)


def _paired_moment(u: Callable, x: np.ndarray, radii: np.ndarray,
                   dirs: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """A(r) = Σ_m w_m ω_m (u(x + rω_m) - u(x - rω_m)), 形状 (len(radii), n)"""
    offsets = radii[:, None, None] * dirs[None, :, :]
    n = x.size
    plus = u((x + offsets).reshape(-1, n)).reshape(offsets.shape[:2])
    minus = u((x - offsets).reshape(-1, n)).reshape(offsets.shape[:2])
    return np.einsum("rm,m,mj->rj", plus - minus, weights, dirs)


def _support_radius(u, support_radius: Optional[float]) -> float:
    if support_radius is not None:
        return float(support_radius)
    value = getattr(u, "support_radius", None)
    if value is None:
        raise PreconditionError("support radius of u is required")
    return float(value)


def _far_field(u: Callable, s: float, x: np.ndarray, rbar: float, nodes: int) -> np.ndarray:
    # x outside the support: integrate over the support box directly
    n = x.size
    t, wt = _composite_nodes(4, nodes)
    axis = -rbar + 2.0 * rbar * t
    weights = 2.0 * rbar * wt
    grids = np.meshgrid(*([axis] * n), indexing="ij")
    ys = np.stack([g.ravel() for g in grids], axis=-1)
    wy = np.ones(1)
    for _ in range(n):
        wy = np.multiply.outer(wy, weights)
    wy = wy.ravel()
    diff = ys - x
    dist = np.linalg.norm(diff, axis=-1)
    vals = u(ys)
    return grad_constant(s, n) * np.einsum("p,pj->j", wy * vals * dist ** (-n - s - 1.0), diff)


def frac_gradient_quadrature(u: Callable, s: float, x: Sequence[float], spec: QuadratureSpec,
                             support_radius: Optional[float] = None) -> np.ndarray:
    """
    用截断球上的奇异积分计算 D^s u(x)

    c_s ∫_{B_R} z (u(x+z) - u(x)) |z|^{-(n+s+1)} dz 写成径向-角度乘积求积:
    径向用分级网格 r = ε₀ + (r_max - ε₀) t^q, q = clamp(2/(1-s), 2, 8);
    [0, ε₀] 内的奇异核贡献按一阶展开解析加入。

    Args:
        u: 对 (P, n) 点数组向量化的 C^1 函数, 支撑在半径 R̄ 的球内
        s: 阶数 s ∈ (0, 1)
        x: 求值点
        spec: 求积参数
        support_radius: R̄, 默认读取 u.support_radius

    Returns:
        np.ndarray: 长度 n 的向量

    Raises:
        PreconditionError: R < |x| + R̄ + 1
    """
    if not 0.0 < s < 1.0:
        raise DomainError(f"frac_gradient_quadrature requires s in (0, 1), got {s}")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    n = x.size
    rbar = _support_radius(u, support_radius)
    dist = float(np.linalg.norm(x))
    if spec.truncation_radius < dist + rbar + 1.0:
        raise PreconditionError(
            f"truncation radius {spec.truncation_radius} < |x| + R̄ + 1 = {dist + rbar + 1.0}")

    if dist >= 2.0 * rbar:
        return _far_field(u, s, x, rbar, spec.radial_nodes)

    dirs, weights = half_sphere_rule(n, spec.angular_nodes)
    t, wt = _composite_nodes(spec.radial_panels, spec.radial_nodes)
    c_s = grad_constant(s, n)
    r_hi = dist + rbar
    eps0 = spec.core_radius
    r_lo = dist - rbar

    if r_lo > eps0:
        # the ball around x misses the support except on this band
        radii = r_lo + (r_hi - r_lo) * t
        dr = (r_hi - r_lo) * wt
        moment = _paired_moment(u, x, radii, dirs, weights)
        return c_s * np.einsum("r,rj->j", dr * radii ** (-1.0 - s), moment)

    q = grading_exponent(s)
    radii = eps0 + (r_hi - eps0) * t ** q
    dr = q * (r_hi - eps0) * t ** (q - 1.0) * wt
    moment = _paired_moment(u, x, radii, dirs, weights)
    bulk = np.einsum("r,rj->j", dr * radii ** (-1.0 - s), moment)

    # A(r) ≈ r·|S^{n-1}|/n·Du(x) on [0, ε₀]
    core_moment = _paired_moment(u, x, np.array([eps0]), dirs, weights)[0]
    core = core_moment * eps0 ** (-s) / (1.0 - s)
    logger.debug("quadrature D^s at x=%s: s=%.3f, q=%.2f, core=%s", x, s, q, core)
    return c_s * (bulk + core)


def core_error_bound(s: float, n: int, eps0: float, second_derivative_bound: float) -> float:
    """舍去的奇异核二阶项上界 c_s·|S^{n-1}|·‖D²u‖·ε₀^{3-s}/(3-s)"""
    return grad_constant(s, n) * sphere_area(n) * second_derivative_bound * eps0 ** (3.0 - s) / (3.0 - s)


# -- identities and probes -------------------------------------------------------

@dataclass
class DecayReport:
    """远场衰减检查: 每个采样点的 (|x|, |D^s u(x)|, bound, ratio), 以及拟合斜率"""

    rows: List[Tuple[float, float, float, float]] = field(default_factory=list)
    slope: Optional[float] = None

    @property
    def max_ratio(self) -> float:
        return max((r[3] for r in self.rows), default=0.0)


def l1_norm_callable(u: Callable, n: int, rbar: float, nodes: int = 16, panels: int = 8) -> float:
    """紧支撑函数在 [-R̄, R̄]^n 上的 L¹ 范数 (复合 Gauss-Legendre)"""
    t, wt = _composite_nodes(panels, nodes)
    axis = -rbar + 2.0 * rbar * t
    weights = 2.0 * rbar * wt
    grids = np.meshgrid(*([axis] * n), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=-1)
    wy = np.ones(1)
    for _ in range(n):
        wy = np.multiply.outer(wy, weights)
    return float(np.sum(wy.ravel() * np.abs(u(pts))))


def decay_check(u: Callable, s: float, sample_points: Sequence[Sequence[float]],
                spec: Optional[QuadratureSpec] = None, support_radius: Optional[float] = None) -> DecayReport:
    """
    检查 |D^s u(x)| ≤ 2^{n+s} c_s ‖u‖_{L¹(B_R̄)} / |x|^{n+s}

    Args:
        u: 紧支撑函数
        s: 阶数
        sample_points: 采样点, 每个 |x| ≥ 2R̄

    Returns:
        DecayReport: 采样点多于两个时附带 log-log 拟合斜率
    """
    rbar = _support_radius(u, support_radius)
    points = [np.atleast_1d(np.asarray(p, dtype=float)) for p in sample_points]
    for p in points:
        if np.linalg.norm(p) < 2.0 * rbar:
            raise PreconditionError(f"sample point {tuple(p)} lies within 2R̄ = {2 * rbar}")
    if not points:
        return DecayReport()
    n = points[0].size
    mass = l1_norm_callable(u, n, rbar)
    c_s = grad_constant(s, n)

    report = DecayReport()
    for p in points:
        dist = float(np.linalg.norm(p))
        local = spec or QuadratureSpec(truncation_radius=dist + rbar + 1.0)
        value = float(np.linalg.norm(frac_gradient_quadrature(u, s, p, local, rbar)))
        bound = 2.0 ** (n + s) * c_s * mass / dist ** (n + s)
        ratio = value / bound if bound > 0 else 0.0
        report.rows.append((dist, value, bound, ratio))

    values = np.array([r[1] for r in report.rows])
    if len(points) >= 2 and np.all(values > 0):
        dists = np.array([r[0] for r in report.rows])
        report.slope = float(np.polyfit(np.log(dists), np.log(values), 1)[0])
    return report


def integration_by_parts_defect(v: VectorField, phi: GridFunction, s: float) -> float:
    """|Σ_i ∫ D^s_i v_i φ + ∫ v·D^s φ|"""
    if v.box != phi.box:
        raise GridMismatchError("v and phi must share one box")
    div = frac_divergence(v, s)
    grad = frac_gradient_spectral(phi, s)
    lhs = (div * phi).integral()
    rhs = float(np.sum(v.array * grad.array) * phi.box.cell_volume)
    return abs(lhs + rhs)


def commute_defect(u: GridFunction, s: float, axis: int) -> float:
    """‖∂_i(D^s u) - D^s(∂_i u)‖_∞ 的相对值"""
    box = u.box
    if not 0 <= axis < box.n:
        raise DomainError(f"axis {axis} out of range for n={box.n}")
    d_axis = gradient_symbol(box, 1.0, axis)
    du = apply_symbol(u, d_axis)
    worst, scale = 0.0, 0.0
    for j in range(box.n):
        m = gradient_symbol(box, s, j)
        a = apply_symbol(apply_symbol(u, m), d_axis).values
        b = apply_symbol(du, m).values
        worst = max(worst, float(np.max(np.abs(a - b))))
        scale = max(scale, float(np.max(np.abs(a))))
    return worst / scale if scale > 0 else worst


def lp_convergence_proxy(u: GridFunction, s_values: Sequence[float], p: float = 2.0) -> List[float]:
    """‖D^s u - Du‖_p, 随 s ↗ 1 应递减"""
    du = classical_gradient(u)
    return [(frac_gradient_spectral(u, s) - du).lp_norm(p) for s in s_values]


def sup_norm_constant(u: GridFunction, s_values: Sequence[float]) -> float:
    """sup_s ‖D^s u‖_∞ / ‖Du‖_∞"""
    du = classical_gradient(u).lp_norm(np.inf)
    if du == 0:
        return 0.0
    return max(frac_gradient_spectral(u, s).lp_norm(np.inf) for s in s_values) / du


def bessel_norm(u: GridFunction, s: float, p: float) -> float:
    """H^{s,p}_0 范数 (‖u‖_p^p + ‖D^s u‖_p^p)^{1/p}"""
    if p < 1:
        raise DomainError(f"p must be >= 1, got {p}")
    a, b = u.lp_norm(p), frac_gradient_spectral(u, s).lp_norm(p)
    if np.isinf(p):
        return max(a, b)
    return (a ** p + b ** p) ** (1.0 / p)


def continuity_probe(u: Callable, s: float, x: Sequence[float], steps: Sequence[float],
                     spec: QuadratureSpec, direction: Optional[Sequence[float]] = None) -> List[Tuple[float, float]]:
    """
    D^s u 的局部 Lipschitz 比 |D^s u(x+h e) - D^s u(x)| / h

    Returns:
        [(h, L_h), ...]
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    e = np.zeros_like(x)
    e[0] = 1.0
    if direction is not None:
        e = np.asarray(direction, dtype=float)
        e = e / np.linalg.norm(e)
    base = frac_gradient_quadrature(u, s, x, spec)
    out = []
    for h in steps:
        shifted = frac_gradient_quadrature(u, s, x + h * e, spec)
        out.append((float(h), float(np.linalg.norm(shifted - base)) / h))
    return out
