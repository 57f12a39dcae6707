# fredholm_solver.py
"""
L_σ(f)u = T 的 Galerkin 离散、共振集 Σ 的计算以及 Fredholm 三择一。

离散空间由距 ∂Ω 至少 margin_cells 个格点的节点函数张成; 刚度矩阵
按列组装, 每列是一次无矩阵算子作用。所有矩阵都是稠密的。
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import List, Optional, Tuple

import numpy as np
import scipy.linalg

from src.core.errors import EigenSolverError, PreconditionError, SizeCapError
from src.core.grid_spectral import GridFunction
from src.core.variational import FormContext, strong_adjoint_operator, strong_operator
from src.utils.utils import parallel_map

logger = logging.getLogger(__name__)

MAX_BASIS = 4096
RANK_TOLERANCE = 1e-8
ADJOINT_TOLERANCE = 1e-10

UNIQUE = "unique"
INFINITE_COMPATIBLE = "infinite_compatible"
INCOMPATIBLE = "incompatible"


@dataclass(frozen=True, eq=False)
class AssembledSystem:
    """
    组装好的离散系统

    Attributes:
        K: K[l, k] = bilinear_L(φ_k, φ_l)
        K_star: K_star[l, k] = bilinear_L_star(φ_k, φ_l), 理论上等于 Kᵀ
        M_f: diag(h^n f(x_k)), 即 L²(f, Ω) Gram 矩阵
        basis: 基函数所在格点的扁平下标
        ctx: 组装时使用的上下文
    """

    K: np.ndarray
    K_star: np.ndarray
    M_f: np.ndarray
    basis: np.ndarray
    ctx: FormContext
    rank_tolerance: float = RANK_TOLERANCE

    @property
    def size(self) -> int:
        return int(self.basis.size)

    @cached_property
    def K_norm(self) -> float:
        return float(np.linalg.norm(self.K, 2))

    @property
    def tolerance(self) -> float:
        """奇异性判定阈值 rank_tolerance·‖K‖₂"""
        return self.rank_tolerance * self.K_norm

    @property
    def adjoint_defect(self) -> float:
        return float(np.max(np.abs(self.K_star - self.K.T))) / max(float(np.max(np.abs(self.K))), 1e-300)

    def shifted(self, sigma: float) -> np.ndarray:
        return self.K + sigma * self.M_f

    def embed(self, coefficients: np.ndarray) -> GridFunction:
        """把基系数写回网格函数"""
        values = np.zeros(self.ctx.box.points.shape[0])
        values[self.basis] = coefficients
        return GridFunction(self.ctx.box, values)

    def functional(self, g: GridFunction) -> np.ndarray:
        """g 作为泛函: T_l = ∫ g φ_l = h^n g(x_l)"""
        return g.values.ravel()[self.basis] * self.ctx.box.cell_volume


@dataclass
class SpectrumReport:
    """
    共振集 Σ 的离散近似

    Attributes:
        sigmas: [(σ, 重数), ...], 按 σ 升序
        sigma0: 强制性位移
        tolerance: 零空间判定阈值
        discarded: 被丢弃的无穷/复特征值个数
    """

    sigmas: List[Tuple[float, int]]
    sigma0: float
    tolerance: float
    discarded: int = 0

    @property
    def values(self) -> List[float]:
        return [s for s, _ in self.sigmas]


@dataclass
class SolveReport:
    status: str
    solution: Optional[np.ndarray]
    kernel_basis: List[np.ndarray] = field(default_factory=list)
    adjoint_kernel_basis: List[np.ndarray] = field(default_factory=list)
    compatibility_defects: List[float] = field(default_factory=list)
    residual: float = 0.0
    sigma: float = 0.0
    subspace_angles: List[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "sigma": self.sigma,
            "residual": self.residual,
            "kernel_dimension": len(self.kernel_basis),
            "adjoint_kernel_dimension": len(self.adjoint_kernel_basis),
            "compatibility_defects": list(self.compatibility_defects),
            "subspace_angles": list(self.subspace_angles),
        }


def _column(ctx: FormContext, operator, index: int, basis: np.ndarray) -> np.ndarray:
    values = np.zeros(ctx.box.points.shape[0])
    values[index] = 1.0
    image = operator(GridFunction(ctx.box, values), ctx)
    return image.values.ravel()[basis] * ctx.box.cell_volume


def assemble(ctx: FormContext, f: Optional[GridFunction] = None, threads: Optional[int] = None,
             rank_tolerance: float = RANK_TOLERANCE) -> AssembledSystem:
    """
    按列组装 K, K_star 与 M_f

    Args:
        ctx: 上下文
        f: L²(f) 权重, 默认为系数导出的 ctx.f
        threads: 并行列数上限
        rank_tolerance: 相对奇异性阈值

    Returns:
        AssembledSystem

    Raises:
        SizeCapError: 基函数超过 4096 个
    """
    basis = np.flatnonzero(ctx.basis_mask.ravel())
    if basis.size > MAX_BASIS:
        raise SizeCapError(f"Galerkin basis has {basis.size} members, cap is {MAX_BASIS}")
    if basis.size == 0:
        raise PreconditionError("no grid node lies inside Ω with the required margin")
    f = ctx.f if f is None else f
    logger.debug("assembling %d columns (n=%d, N=%d)", basis.size, ctx.box.n, ctx.box.points_per_axis)

    # warm the cached tables before threads share them
    _ = (ctx.tables, ctx.symbols, ctx.a0)

    K = np.column_stack(parallel_map(lambda k: _column(ctx, strong_operator, k, basis), basis, threads))
    K_star = np.column_stack(
        parallel_map(lambda k: _column(ctx, strong_adjoint_operator, k, basis), basis, threads))
    M_f = np.diag(f.values.ravel()[basis] * ctx.box.cell_volume)

    system = AssembledSystem(K, K_star, M_f, basis, ctx, rank_tolerance)
    defect = system.adjoint_defect
    if defect > ADJOINT_TOLERANCE:
        logger.warning("discrete adjointness defect %.3e exceeds %.0e", defect, ADJOINT_TOLERANCE)
    return system


def nullity(matrix: np.ndarray, tolerance: float) -> int:
    return int(np.sum(scipy.linalg.svdvals(matrix) <= tolerance))


def spectrum(system: AssembledSystem, count: Optional[int] = None) -> SpectrumReport:
    """
    Σ = {σ = -λ : Kv = λ M_f v}, 只保留 σ < σ₀ 的实值

    M_f 奇异时对应 β = 0 的特征值为无穷, 直接丢弃。

    Args:
        system: 组装好的系统
        count: 只保留最大的 count 个 σ

    Raises:
        EigenSolverError: 广义特征值求解失败
    """
    sigma0 = system.ctx.sigma0
    tol = system.tolerance
    if not np.any(system.M_f):
        return SpectrumReport([], sigma0, tol)
    try:
        (alpha, beta), _ = scipy.linalg.eig(system.K, system.M_f, homogeneous_eigvals=True)
    except (scipy.linalg.LinAlgError, ValueError) as e:
        raise EigenSolverError(f"generalized eigenproblem failed: {e}") from e

    scale = max(float(np.max(np.abs(beta))), 1e-300)
    finite = np.abs(beta) > 1e-12 * scale
    lam = alpha[finite] / beta[finite]
    real = np.abs(lam.imag) <= 1e-8 * np.maximum(1.0, np.abs(lam))
    discarded = int(alpha.size - np.sum(real))
    sigmas = np.sort(-lam[real].real)

    above = sigmas >= sigma0
    if np.any(above):
        logger.warning("dropping %d σ values at or above σ₀=%.4g", int(np.sum(above)), sigma0)
        sigmas = sigmas[~above]
    if count is not None:
        sigmas = sigmas[-count:] if count > 0 else sigmas[:0]

    grouped: List[Tuple[float, int]] = []
    for s in sigmas:
        if grouped and abs(s - grouped[-1][0]) <= 1e-6 * max(1.0, abs(s)):
            continue
        grouped.append((float(s), max(1, nullity(system.shifted(s), tol))))
    logger.info("spectrum: %d resonance values below σ₀=%.4g (%d discarded)", len(grouped), sigma0, discarded)
    return SpectrumReport(grouped, sigma0, tol, discarded)


def _relative_residual(matrix: np.ndarray, x: np.ndarray, T: np.ndarray) -> float:
    norm_T = float(np.linalg.norm(T))
    if norm_T == 0.0:
        return float(np.linalg.norm(matrix @ x))
    return float(np.linalg.norm(matrix @ x - T)) / norm_T


def _direct_solve(matrix: np.ndarray, T: np.ndarray) -> np.ndarray:
    return scipy.linalg.solve(matrix, T)


def _angles(a: List[np.ndarray], b: List[np.ndarray]) -> List[float]:
    if not a or not b:
        return []
    return [float(x) for x in scipy.linalg.subspace_angles(np.column_stack(a), np.column_stack(b))]


def solve(system: AssembledSystem, sigma: float, T: np.ndarray) -> SolveReport:
    """
    Fredholm 三择一

    (a) K_σ 的最小奇异值 > 1e-8·‖K‖₂: 直接求解, unique;
    (b) 否则取 K_σ 与 K_σᵀ 的零空间, 检查 ⟨T, u*⟩: 全部在容差内则返回
        最小范数解与核基, infinite_compatible; 否则 incompatible。

    Args:
        system: 组装好的系统
        sigma: 位移 σ
        T: 右端泛函 (长度为基函数个数)

    Returns:
        SolveReport
    """
    T = np.asarray(T, dtype=float)
    if T.shape != (system.size,):
        raise PreconditionError(f"right-hand side has shape {T.shape}, expected ({system.size},)")
    if not np.all(np.isfinite(T)):
        raise PreconditionError("right-hand side is not finite")

    matrix = system.shifted(sigma)
    U, S, Vt = scipy.linalg.svd(matrix)
    tol = system.tolerance
    if S[-1] > tol:
        x = _direct_solve(matrix, T)
        return SolveReport(UNIQUE, x, residual=_relative_residual(matrix, x, T), sigma=sigma)

    singular = S <= tol
    kernel = [Vt[i] for i in np.flatnonzero(singular)]
    adjoint = [U[:, i] for i in np.flatnonzero(singular)]
    norm_T = float(np.linalg.norm(T))
    defects = [abs(float(T @ u)) for u in adjoint]
    angles = _angles(kernel, adjoint)

    if all(d <= system.rank_tolerance * max(norm_T, 1e-300) for d in defects):
        keep = ~singular
        x = Vt[keep].T @ ((U[:, keep].T @ T) / S[keep])
        report = SolveReport(INFINITE_COMPATIBLE, x, kernel, adjoint, defects,
                             _relative_residual(matrix, x, T), sigma, angles)
    else:
        report = SolveReport(INCOMPATIBLE, None, kernel, adjoint, defects, float("nan"), sigma, angles)
        logger.warning("σ=%.6g is resonant and T violates compatibility (max defect %.3e)", sigma, max(defects))
    return report


def kernel_dimension_check(system: AssembledSystem, sigma: float) -> Tuple[int, int]:
    """K_σ 与 K_σᵀ 的数值零度 (d, d*); σ ∉ Σ 时为 (0, 0)"""
    matrix = system.shifted(sigma)
    d = nullity(matrix, system.tolerance)
    d_star = nullity(matrix.T, system.tolerance)
    return d, d_star


def kernel_angles(system: AssembledSystem, sigma: float) -> List[float]:
    """核与伴随核之间的子空间夹角"""
    U, S, Vt = scipy.linalg.svd(system.shifted(sigma))
    singular = np.flatnonzero(S <= system.tolerance)
    return _angles([Vt[i] for i in singular], [U[:, i] for i in singular])


def inf_sup_proxy(system: AssembledSystem, sigma: float) -> float:
    """K_σ 的最小奇异值"""
    return float(scipy.linalg.svdvals(system.shifted(sigma))[-1])


def lax_milgram_solve(system: AssembledSystem, sigma: float, T: np.ndarray,
                      bounded_certified: bool = True) -> np.ndarray:
    """
    σ ≥ σ₀ 时的直接求解 (与 solve 的 unique 分支同一路径)

    Args:
        bounded_certified: f 的有界性未被证实时要求 σ > σ₀

    Raises:
        PreconditionError: σ 低于 σ₀
        EigenSolverError: K_σ 的对称部分不正定
    """
    sigma0 = system.ctx.sigma0
    if sigma < sigma0 or (not bounded_certified and sigma == sigma0):
        raise PreconditionError(f"Lax-Milgram requires sigma >= sigma0={sigma0:.6g}, got {sigma}")
    T = np.asarray(T, dtype=float)
    matrix = system.shifted(sigma)
    margin = float(scipy.linalg.eigvalsh(0.5 * (matrix + matrix.T))[0])
    if margin <= 0:
        raise EigenSolverError(f"symmetric part of K+σM_f is not positive definite (min eigenvalue {margin:.3e})")
    x = _direct_solve(matrix, T)
    logger.info("Lax-Milgram solve at σ=%.6g: coercivity margin %.3e, inf-sup proxy %.3e, residual %.2e",
                sigma, margin, inf_sup_proxy(system, sigma), _relative_residual(matrix, x, T))
    return x
