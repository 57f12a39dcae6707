# variational.py
"""
H⁰(A, g, Ω) 内积、加权 L² 内积、双线性形式 (Lu, v) 及其伴随,
以及连续性/强制性证书。

所有 x-积分都是盒子上的均匀网格求积, s-积分用 μ 的求积节点。
D^s 由谱符号实现, 符号数组按 s 节点缓存在 FormContext 中。
"""

import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, List, Optional, Tuple

import numpy as np

from src.core.coefficients import (CoefficientSet, SampleLattice, cauchy_schwarz_constant,
                                   default_lattice, f_values)
from src.core.errors import DomainError, GridMismatchError, PreconditionError
from src.core.fractional_calculus import gradient_symbol
from src.core.grid_spectral import Box, Domain, GridFunction, apply_symbol, supported_in
from src.core.measure_mu import MeasureSpec, total_mass

logger = logging.getLogger(__name__)

BASIS_MARGIN_CELLS = 2


@dataclass(frozen=True, eq=False)
class FormContext:
    """
    双线性形式的求值上下文

    Attributes:
        mu: 测度
        cs: 系数
        omega: 区域, 须以 3·diam(Ω) 的余量嵌入盒子
        box: 计算盒子
        g: H⁰(A, g, Ω) 中的非负权重, None 表示 g ≡ 0
        margin_cells: 节点基函数到 ∂Ω 的最小距离 (格点数)
    """

    mu: MeasureSpec
    cs: CoefficientSet
    omega: Domain
    box: Box
    g: Optional[GridFunction] = None
    margin_cells: int = BASIS_MARGIN_CELLS

    def __post_init__(self):
        if self.cs.n != self.box.n:
            raise DomainError(f"coefficients are {self.cs.n}-dimensional, box is {self.box.n}-dimensional")
        self.omega.check_embedding(self.box, margin_factor=3.0)
        if self.g is not None:
            if self.g.box != self.box:
                raise GridMismatchError("weight g lives on a different box")
            if np.any(self.g.values < 0):
                raise DomainError("weight g must be nonnegative")

    @cached_property
    def nodes(self) -> List[Tuple[float, float]]:
        return self.mu.quadrature()

    @cached_property
    def mask(self) -> np.ndarray:
        return self.omega.mask(self.box)

    @cached_property
    def basis_mask(self) -> np.ndarray:
        return self.omega.mask(self.box, margin_cells=self.margin_cells)

    @cached_property
    def symbols(self) -> Dict[float, List[np.ndarray]]:
        return {s: [gradient_symbol(self.box, s, j) for j in range(self.box.n)] for s, _ in self.nodes}

    @cached_property
    def tables(self) -> Dict[float, Dict[str, np.ndarray]]:
        """每个 s 节点上 A (n, n, *shape), a 与 b (n, *shape) 的网格值"""
        X = self.box.points
        shape = self.box.shape
        out = {}
        for s, _ in self.nodes:
            A = self.cs.A(s, X)
            out[s] = {
                "A": np.moveaxis(A, 0, -1).reshape(A.shape[1:] + shape),
                "a": self.cs.a_vec(s, X).T.reshape((self.box.n,) + shape),
                "b": self.cs.b_vec(s, X).T.reshape((self.box.n,) + shape),
            }
        return out

    @cached_property
    def a0(self) -> np.ndarray:
        return self.cs.a0(self.box.points).reshape(self.box.shape)

    @cached_property
    def lattice(self) -> SampleLattice:
        lat = default_lattice(self.box.n, self.box.points)
        return SampleLattice(tuple(s for s, _ in self.nodes), lat.points, lat.directions)

    @cached_property
    def K_A(self) -> float:
        """在实际使用的 (s 节点 × 网格点) 上计算的 K_A"""
        return cauchy_schwarz_constant(self.cs.A, self.lattice)

    @cached_property
    def f(self) -> GridFunction:
        return GridFunction(self.box, f_values(self.cs, self.box.points))

    @cached_property
    def mass(self) -> float:
        return total_mass(self.mu)

    @property
    def sigma0(self) -> float:
        """σ₀ = 2·K_A·μ((0,1]) + 1"""
        return 2.0 * self.K_A * self.mass + 1.0

    @property
    def continuity_constant(self) -> float:
        """(1 + 2√max(1, μ((0,1])))·√K_A + 1; μ((0,1]) ≤ 1 时即 3√K_A + 1"""
        return (1.0 + 2.0 * math.sqrt(max(1.0, self.mass))) * math.sqrt(self.K_A) + 1.0

    def gradient(self, u: GridFunction, s: float) -> np.ndarray:
        return np.stack([apply_symbol(u, m).values for m in self.symbols[s]])

    def divergence(self, flux: np.ndarray, s: float) -> np.ndarray:
        return sum(apply_symbol(GridFunction(self.box, flux[i]), m).values
                   for i, m in enumerate(self.symbols[s]))

    def with_weight(self, g: Optional[GridFunction]) -> "FormContext":
        ctx = FormContext(self.mu, self.cs, self.omega, self.box, g, self.margin_cells)
        # share the cached tables
        for key in ("nodes", "mask", "basis_mask", "symbols", "tables", "a0", "lattice", "K_A", "f", "mass"):
            if key in self.__dict__:
                ctx.__dict__[key] = self.__dict__[key]
        return ctx


def _require_support(ctx: FormContext, *functions: GridFunction) -> None:
    for u in functions:
        if u.box != ctx.box:
            raise GridMismatchError("grid function lives on a different box than the form context")
        if not supported_in(u, ctx.omega):
            raise PreconditionError("grid function is not supported in Ω")


def _cell(ctx: FormContext, values: np.ndarray) -> float:
    return float(np.sum(values) * ctx.box.cell_volume)


def h0_inner(u: GridFunction, v: GridFunction, ctx: FormContext) -> float:
    """
    ⟨u, v⟩_{H⁰(A, g, Ω)} = ∫ dμ(s) ∫_box a^{ij}_S D^s_i u D^s_j v + ∫_Ω g u v

    Raises:
        PreconditionError: u 或 v 在 Ω 外不为零
    """
    _require_support(ctx, u, v)
    total = 0.0
    for s, w in ctx.nodes:
        A = ctx.tables[s]["A"]
        A_S = 0.5 * (A + np.swapaxes(A, 0, 1))
        du = ctx.gradient(u, s)
        dv = du if v is u else ctx.gradient(v, s)
        total += w * _cell(ctx, np.einsum("i...,ij...,j...->...", du, A_S, dv))
    if ctx.g is not None:
        total += weighted_l2(u, v, ctx.g, ctx.omega)
    return float(total)


def h0_norm(u: GridFunction, ctx: FormContext) -> float:
    return math.sqrt(max(h0_inner(u, u, ctx), 0.0))


def weighted_l2(u: GridFunction, v: GridFunction, h: GridFunction, omega: Domain) -> float:
    """⟨u, v⟩_{L²(h, Ω)} = ∫_Ω h u v"""
    return (h * u * v).integral(omega.mask(u.box))


def weighted_lp_norm(u: GridFunction, h: GridFunction, p: float, omega: Domain) -> float:
    """
    ‖u‖_{L^p(h, Ω)} = (∫_Ω h |u|^p)^{1/p}

    p = ∞ 时取 h > 0 的格点上的 max|u|。
    """
    if p < 1:
        raise DomainError(f"p must be >= 1, got {p}")
    mask = omega.mask(u.box)
    if np.isinf(p):
        keep = mask & (h.values > 0)
        return float(np.max(np.abs(u.values[keep]))) if np.any(keep) else 0.0
    return GridFunction(u.box, h.values * np.abs(u.values) ** p).integral(mask) ** (1.0 / p)


def _form(u: GridFunction, v: GridFunction, ctx: FormContext, adjoint: bool) -> float:
    total = 0.0
    for s, w in ctx.nodes:
        t = ctx.tables[s]
        du = ctx.gradient(u, s)
        dv = du if v is u else ctx.gradient(v, s)
        if adjoint:
            # a^{ji} D_j u D_i v + b^i u D_i v + a^i v D_i u
            principal = np.einsum("j...,ji...,i...->...", du, t["A"], dv)
            lower = np.sum(t["b"] * dv, axis=0) * u.values + np.sum(t["a"] * du, axis=0) * v.values
        else:
            # a^{ij} D_j u D_i v + a^i u D_i v + b^i v D_i u
            principal = np.einsum("i...,ij...,j...->...", dv, t["A"], du)
            lower = np.sum(t["a"] * dv, axis=0) * u.values + np.sum(t["b"] * du, axis=0) * v.values
        total += w * _cell(ctx, principal + lower)
    return float(total + _cell(ctx, ctx.a0 * u.values * v.values))


def bilinear_L(u: GridFunction, v: GridFunction, ctx: FormContext) -> float:
    """(Lu, v), 完整的非对称形式 (含 ∫ a u v)"""
    _require_support(ctx, u, v)
    return _form(u, v, ctx, adjoint=False)


def bilinear_L_star(u: GridFunction, v: GridFunction, ctx: FormContext) -> float:
    """(L*u, v); 恒等于 bilinear_L(v, u)"""
    _require_support(ctx, u, v)
    return _form(u, v, ctx, adjoint=True)


def strong_operator(u: GridFunction, ctx: FormContext) -> GridFunction:
    """
    强形式 Lu = ∫ dμ(s) [-D^s_i(a^{ij} D^s_j u + a^i u) + b^i D^s_i u] + a u

    谱 D^s 在周期网格上反对称, 所以 h^n Σ v·Lu 与 bilinear_L(u, v) 只差舍入误差。
    """
    out = ctx.a0 * u.values
    for s, w in ctx.nodes:
        t = ctx.tables[s]
        du = ctx.gradient(u, s)
        flux = np.einsum("ij...,j...->i...", t["A"], du) + t["a"] * u.values
        out = out + w * (-ctx.divergence(flux, s) + np.sum(t["b"] * du, axis=0))
    return GridFunction(ctx.box, out)


def strong_adjoint_operator(u: GridFunction, ctx: FormContext) -> GridFunction:
    """L*u = ∫ dμ(s) [-D^s_i(a^{ji} D^s_j u + b^i u) + a^i D^s_i u] + a u"""
    out = ctx.a0 * u.values
    for s, w in ctx.nodes:
        t = ctx.tables[s]
        du = ctx.gradient(u, s)
        flux = np.einsum("ji...,j...->i...", t["A"], du) + t["b"] * u.values
        out = out + w * (-ctx.divergence(flux, s) + np.sum(t["a"] * du, axis=0))
    return GridFunction(ctx.box, out)


def distributional_consistency(u: GridFunction, phi: GridFunction, ctx: FormContext) -> float:
    """
    |∫(Lu)φ - bilinear_L(u, φ)|, 相对于 ‖Lu‖_{L²}‖φ‖_{L²}
    """
    Lu = strong_operator(u, ctx)
    scale = Lu.lp_norm(2.0) * phi.lp_norm(2.0)
    if scale == 0.0:
        return 0.0
    defect = abs((Lu * phi).integral() - bilinear_L(u, phi, ctx))
    return defect / scale


@dataclass
class CoercivityRecord:
    form_value: float
    lower_bound: float
    margin: float
    sigma0: float
    h0_norm_sq: float
    weighted_sq: float

    @property
    def holds(self) -> bool:
        scale = max(abs(self.form_value), self.h0_norm_sq, 1e-300)
        return self.margin >= -1e-9 * scale


def coercivity_certificate(u: GridFunction, ctx: FormContext) -> CoercivityRecord:
    """
    (Lu, u) ≥ ½‖u‖²_{H⁰(A,Ω)} - σ₀∫_Ω f u²

    Returns:
        CoercivityRecord: ((Lu,u), 右端, 余量, σ₀, ...)
    """
    plain = ctx.with_weight(None)
    form = bilinear_L(u, u, plain)
    norm_sq = h0_inner(u, u, plain)
    weighted = weighted_l2(u, u, ctx.f, ctx.omega)
    bound = 0.5 * norm_sq - ctx.sigma0 * weighted
    record = CoercivityRecord(form, bound, form - bound, ctx.sigma0, norm_sq, weighted)
    if not record.holds:
        logger.warning("coercivity margin %.3e negative (σ₀=%.4g)", record.margin, ctx.sigma0)
    return record


@dataclass
class ContinuityRecord:
    value: float
    bound: float
    constant: float
    ratio: float

    @property
    def holds(self) -> bool:
        return abs(self.value) <= self.bound * (1.0 + 1e-9) + 1e-300


def continuity_certificate(u: GridFunction, v: GridFunction, ctx: FormContext) -> ContinuityRecord:
    """
    |(Lu, v)| ≤ C ‖u‖_{H⁰(A,f,Ω)} ‖v‖_{H⁰(A,f,Ω)}, 范数中取 g := f
    """
    weighted = ctx.with_weight(ctx.f)
    value = bilinear_L(u, v, ctx.with_weight(None))
    norms = h0_norm(u, weighted) * h0_norm(v, weighted)
    constant = ctx.continuity_constant
    ratio = abs(value) / norms if norms > 0 else 0.0
    return ContinuityRecord(value, constant * norms, constant, ratio)
