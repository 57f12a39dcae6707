# coefficients.py
"""
算子 L 的系数数据: 矩阵场 A(s,x), 椭圆包络 λ/Λ, 低阶项 a^i, b^i, a,
控制量 ā^i, b̄^i, B̄, 由此导出的权重 f, Cauchy-Schwarz 常数 K_A,
系数假设的数值检查, 紧有界性的指数判据以及有界性探针。

所有系数都是对点数组 X (P, n) 向量化的可调用对象:
A(s, X) -> (P, n, n), a_vec(s, X) -> (P, n), a0(X) -> (P,)。
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import roots_legendre

from src.core.errors import ConfigError, DomainError, HypothesisViolation, PreconditionError
from src.core.grid_spectral import Box, Domain, GridFunction
from src.core.measure_mu import MeasureSpec, mass_at_one

logger = logging.getLogger(__name__)

LATTICE_SEED = 1729
PSD_TOLERANCE = 1e-12

MatrixField = Callable[[float, np.ndarray], np.ndarray]
VectorFieldFn = Callable[[float, np.ndarray], np.ndarray]
ScalarFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class CoefficientSet:
    """
    系数集合

    Attributes:
        n: 维数
        A: (s, X) -> (P, n, n)
        lam, Lam: X -> (P,), 椭圆包络
        a_vec, b_vec: (s, X) -> (P, n), 低阶项 a^i, b^i
        a0: X -> (P,), 零阶项 a
        a_bar, b_bar: X -> (P, n), |a^i|, |b^i| 的控制量
        B_bar: X -> (P, n, n), |A^{-1}| 的逐元素控制量 (对称半正定)
    """

    n: int
    A: MatrixField
    lam: ScalarFn
    Lam: ScalarFn
    a_vec: VectorFieldFn
    b_vec: VectorFieldFn
    a0: ScalarFn
    a_bar: ScalarFn
    b_bar: ScalarFn
    B_bar: ScalarFn
    label: str = "custom"
    params: Dict[str, Any] = field(default_factory=dict, compare=False)

    def A_sym(self, s: float, X: np.ndarray) -> np.ndarray:
        A = self.A(s, X)
        return 0.5 * (A + np.swapaxes(A, -1, -2))

    @property
    def lower_order_vanishes(self) -> bool:
        return bool(self.params.get("lower_order_zero", False))


@dataclass(frozen=True)
class SampleLattice:
    """矩阵检查用的 (s, x, ξ) 采样格"""

    s_values: Tuple[float, ...]
    points: np.ndarray
    directions: np.ndarray


def default_lattice(n: int, points: np.ndarray, s_count: int = 8, directions: int = 32,
                    seed: int = LATTICE_SEED) -> SampleLattice:
    rng = np.random.default_rng(seed)
    xi = rng.normal(size=(directions, n))
    xi /= np.linalg.norm(xi, axis=1, keepdims=True)
    s_values = tuple(float(s) for s in np.linspace(1.0 / s_count, 1.0, s_count))
    return SampleLattice(s_values, np.atleast_2d(points), xi)


@dataclass
class EllipticityReport:
    K_A: float
    delta: float
    growth_ok: bool
    local_integrability_ok: bool
    p_delta: float
    relaxed: bool = False
    lambda_inv_integral: float = float("nan")
    Lambda_integral: float = float("nan")
    messages: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.growth_ok and self.local_integrability_ok


# -- presets ----------------------------------------------------------------------

def _as_points(X: np.ndarray) -> np.ndarray:
    return np.atleast_2d(np.asarray(X, dtype=float))


def _dominating_inverse(A: Callable[[np.ndarray], np.ndarray]) -> ScalarFn:
    """B̄ = M + diag(Σ_{j≠i} M_ij), M_ij = max(|b_ij|, |b_ji|): 逐元素控制 |A^{-1}| 且对角占优"""
    def B_bar(X):
        inv = np.linalg.inv(A(_as_points(X)))
        M = np.maximum(np.abs(inv), np.abs(np.swapaxes(inv, -1, -2)))
        off = np.sum(M, axis=-1) - np.diagonal(M, axis1=-2, axis2=-1)
        idx = np.arange(M.shape[-1])
        M = M.copy()
        M[..., idx, idx] += off
        return M
    return B_bar


@dataclass(frozen=True)
class LowerOrder:
    """低阶向量场预设: zero / constant (a^i = c_i) / linear (a^i = c_i x_i)"""

    kind: str = "zero"
    values: Tuple[float, ...] = ()

    def field(self, n: int) -> Tuple[VectorFieldFn, ScalarFn]:
        c = np.zeros(n) if self.kind == "zero" else np.asarray(self.values, dtype=float)
        if c.shape != (n,):
            raise DomainError(f"lower-order field needs {n} values, got {self.values}")
        if self.kind in ("zero", "constant"):
            return (lambda s, X: np.broadcast_to(c, _as_points(X).shape).copy(),
                    lambda X: np.broadcast_to(np.abs(c), _as_points(X).shape).copy())
        if self.kind == "linear":
            return (lambda s, X: _as_points(X) * c, lambda X: np.abs(_as_points(X) * c))
        raise DomainError(f"unknown lower-order preset {self.kind!r}")

    @property
    def vanishes(self) -> bool:
        return self.kind == "zero" or not any(self.values)


def _assemble(n: int, matrix_fn: Callable[[np.ndarray], np.ndarray], lam: ScalarFn, Lam: ScalarFn,
              a: LowerOrder, b: LowerOrder, a0: float, label: str, params: Dict[str, Any]) -> CoefficientSet:
    a_vec, a_bar = a.field(n)
    b_vec, b_bar = b.field(n)
    params = dict(params)
    params["lower_order_zero"] = a.vanishes and b.vanishes and a0 == 0.0
    return CoefficientSet(
        n=n,
        A=lambda s, X: matrix_fn(_as_points(X)),
        lam=lam,
        Lam=Lam,
        a_vec=a_vec,
        b_vec=b_vec,
        a0=lambda X: np.full(_as_points(X).shape[0], float(a0)),
        a_bar=a_bar,
        b_bar=b_bar,
        B_bar=_dominating_inverse(matrix_fn),
        label=label,
        params=params,
    )


def constant_matrix(matrix: Sequence[Sequence[float]], a: LowerOrder = LowerOrder(),
                    b: LowerOrder = LowerOrder(), a0: float = 0.0) -> CoefficientSet:
    """A(s,x) ≡ matrix"""
    M = np.atleast_2d(np.asarray(matrix, dtype=float))
    n = M.shape[0]
    if M.shape != (n, n):
        raise DomainError(f"coefficient matrix must be square, got shape {M.shape}")
    eig = np.linalg.eigvalsh(0.5 * (M + M.T))
    if eig[0] <= 0:
        raise HypothesisViolation("positive_definite", "constant matrix is not positive definite",
                                  witness={"eigenvalue": float(eig[0])})
    lo, hi = float(eig[0]), float(eig[-1])
    return _assemble(
        n, lambda X: np.broadcast_to(M, (X.shape[0], n, n)).copy(),
        lambda X: np.full(_as_points(X).shape[0], lo), lambda X: np.full(_as_points(X).shape[0], hi),
        a, b, a0, "constant_matrix", {"matrix": M.tolist()})


def identity(n: int, **kwargs) -> CoefficientSet:
    return constant_matrix(np.eye(n), **kwargs)


def diagonal_power_law(n: int, exponents: Sequence[float], offsets: Sequence[float],
                       a: LowerOrder = LowerOrder(), b: LowerOrder = LowerOrder(),
                       a0: float = 0.0) -> CoefficientSet:
    """A(x) = diag((ε_i + |x|²)^{γ_i/2}); ε_i = 0 时在原点退化"""
    gam = np.asarray(exponents, dtype=float)
    eps = np.asarray(offsets, dtype=float)
    if gam.shape != (n,) or eps.shape != (n,) or np.any(eps < 0):
        raise DomainError("diagonal power law needs n exponents and n nonnegative offsets")

    def diag(X):
        r2 = np.sum(_as_points(X) ** 2, axis=-1)
        return (eps[None, :] + r2[:, None]) ** (0.5 * gam[None, :])

    def matrix_fn(X):
        d = diag(X)
        out = np.zeros(d.shape + (n,))
        idx = np.arange(n)
        out[:, idx, idx] = d
        return out

    return _assemble(n, matrix_fn, lambda X: np.min(diag(X), axis=-1), lambda X: np.max(diag(X), axis=-1),
                     a, b, a0, "diagonal_power_law", {"exponents": gam.tolist(), "offsets": eps.tolist()})


def rotation_perturbed(n: int, strength: float, a: LowerOrder = LowerOrder(), b: LowerOrder = LowerOrder(),
                       a0: float = 0.0) -> CoefficientSet:
    """A = I + strength·J, J 为 (x_1, x_2) 平面上的反对称旋转生成元; n = 1 时 A = I"""
    J = np.zeros((n, n))
    if n >= 2:
        J[0, 1], J[1, 0] = -1.0, 1.0
    M = np.eye(n) + strength * J
    cs = constant_matrix(M, a=a, b=b, a0=a0)
    return CoefficientSet(**{**cs.__dict__, "label": "rotation_perturbed",
                             "params": {**cs.params, "strength": strength}})


def from_config(block: Dict[str, Any], n: int, path: str = "coefficients") -> CoefficientSet:
    """
    解析 coefficients 块

    {"preset": "identity"|"constant_matrix"|"diagonal_power_law"|"rotation_perturbed",
     "matrix": [[...]], "strength": 0.2, "exponents": [...], "offsets": [...],
     "a": {"kind": "linear", "values": [...]}, "b": {...}, "a0": 1.0}
    """
    if not isinstance(block, dict):
        raise ConfigError(path, "must be an object")
    allowed = {"preset", "matrix", "strength", "exponents", "offsets", "a", "b", "a0"}
    extra = set(block) - allowed
    if extra:
        raise ConfigError(f"{path}.{sorted(extra)[0]}", "unknown key")

    def lower(key):
        spec = block.get(key, {"kind": "zero"})
        bad = set(spec) - {"kind", "values"}
        if bad:
            raise ConfigError(f"{path}.{key}.{sorted(bad)[0]}", "unknown key")
        return LowerOrder(spec.get("kind", "zero"), tuple(spec.get("values", ())))

    preset = block.get("preset", "identity")
    kwargs = dict(a=lower("a"), b=lower("b"), a0=float(block.get("a0", 0.0)))
    try:
        if preset == "identity":
            return identity(n, **kwargs)
        if preset == "constant_matrix":
            return constant_matrix(block["matrix"], **kwargs)
        if preset == "diagonal_power_law":
            return diagonal_power_law(n, block["exponents"], block.get("offsets", [0.0] * n), **kwargs)
        if preset == "rotation_perturbed":
            return rotation_perturbed(n, float(block.get("strength", 0.2)), **kwargs)
    except KeyError as e:
        raise ConfigError(f"{path}.{e.args[0]}", f"required by preset {preset!r}")
    except DomainError as e:
        raise ConfigError(path, str(e))
    raise ConfigError(f"{path}.preset", f"unknown preset {preset!r}")


# -- matrix lemmas ----------------------------------------------------------------

def _lattice_matrices(A: MatrixField, lattice: SampleLattice):
    for s in lattice.s_values:
        yield s, A(s, lattice.points)


def cauchy_schwarz_constant(A: MatrixField, lattice: SampleLattice) -> float:
    """
    K_A: A 在采样格上处处对称时为 1, 否则为 max (‖A‖/c)²

    c 取 A_S 的最小特征值, 即 Rayleigh 商的下确界, 因此返回值对所有
    (ξ, ψ) 成立, 而不只是采样方向。

    Raises:
        HypothesisViolation: 某个采样点上 A 不正定, 附带 (s, x, ξ)
    """
    symmetric = True
    worst = 1.0
    for s, mats in _lattice_matrices(A, lattice):
        quotients = np.einsum("di,pij,dj->pd", lattice.directions, mats, lattice.directions)
        p, d = np.unravel_index(np.argmin(quotients), quotients.shape)
        sym = 0.5 * (mats + np.swapaxes(mats, -1, -2))
        c = np.linalg.eigvalsh(sym)[:, 0]
        if quotients[p, d] <= 0 or np.any(c <= 0):
            k = int(np.argmin(c)) if np.any(c <= 0) else int(p)
            raise HypothesisViolation(
                "positive_definite", "A(s,x) is not positive definite",
                witness={"s": s, "x": lattice.points[k].tolist(), "xi": lattice.directions[d].tolist()})
        norms = np.linalg.norm(mats, ord=2, axis=(-2, -1))
        if np.max(np.abs(mats - np.swapaxes(mats, -1, -2))) > 1e-14 * max(float(np.max(norms)), 1.0):
            symmetric = False
        worst = max(worst, float(np.max((norms / c) ** 2)))
    return 1.0 if symmetric else worst


def cauchy_schwarz_empirical(A: MatrixField, lattice: SampleLattice, pairs: int = 10_000,
                             seed: int = LATTICE_SEED) -> float:
    """随机 (ξ, ψ) 对上 |ξᵀAψ|² / ((ξᵀAξ)(ψᵀAψ)) 的经验上确界"""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for s, mats in _lattice_matrices(A, lattice):
        per_point = max(1, pairs // (len(lattice.s_values) * mats.shape[0]))
        xi = rng.normal(size=(mats.shape[0], per_point, mats.shape[-1]))
        psi = rng.normal(size=xi.shape)
        cross = np.einsum("pki,pij,pkj->pk", xi, mats, psi) ** 2
        diag = np.einsum("pki,pij,pkj->pk", xi, mats, xi) * np.einsum("pki,pij,pkj->pk", psi, mats, psi)
        worst = max(worst, float(np.max(cross / diag)))
    return worst


def dual_pairing_check(A: np.ndarray, B: np.ndarray, K_A: float, xi: np.ndarray, psi: np.ndarray) -> bool:
    """
    |ξ·ψ|² ≤ K_A (ξᵀA_Sξ)(ψᵀBψ), B = A^{-1}

    A_S 在内部由 A 构造, 以便检查逆矩阵残差。

    Raises:
        PreconditionError: ‖AB - I‖ > 1e-10
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    residual = float(np.linalg.norm(A @ B - np.eye(A.shape[0])))
    if residual > 1e-10:
        raise PreconditionError(f"B is not the inverse of A (residual {residual:.2e})")
    A_S = 0.5 * (A + A.T)
    lhs = float(np.dot(xi, psi)) ** 2
    rhs = K_A * float(xi @ A_S @ xi) * float(psi @ B @ psi)
    return lhs <= rhs * (1.0 + 1e-12) + 1e-300


# -- the weight f -----------------------------------------------------------------

def f_values(cs: CoefficientSet, X: np.ndarray) -> np.ndarray:
    """f = b̄^{ij}(ā^i ā^j + b̄^i b̄^j) + |a| 在点集上的值"""
    X = _as_points(X)
    Bb = cs.B_bar(X)
    scale = max(float(np.max(np.abs(Bb))), 1.0)
    min_eig = float(np.min(np.linalg.eigvalsh(0.5 * (Bb + np.swapaxes(Bb, -1, -2)))))
    if min_eig < -PSD_TOLERANCE * scale:
        raise HypothesisViolation("dominating_matrix_psd", "B̄ is not positive semidefinite",
                                  witness={"min_eigenvalue": min_eig})
    ab, bb = cs.a_bar(X), cs.b_bar(X)
    f = (np.einsum("pij,pi,pj->p", Bb, ab, ab) + np.einsum("pij,pi,pj->p", Bb, bb, bb)
         + np.abs(cs.a0(X)))
    if np.any(f < 0):
        k = int(np.argmin(f))
        raise HypothesisViolation("f_nonnegative", "f takes a negative value", witness={"x": X[k].tolist()})
    return f


def f_field(cs: CoefficientSet, box: Box) -> GridFunction:
    """导出权重 f 的网格函数"""
    return GridFunction(box, f_values(cs, box.points))


# -- hypotheses -------------------------------------------------------------------

def p_delta(delta: float) -> float:
    """p(δ) = (1 + δ)/(1 + δ/2) ∈ (1, 2)"""
    if delta < 0:
        raise DomainError(f"delta must be nonnegative, got {delta}")
    return (1.0 + delta) / (1.0 + 0.5 * delta)


_BASE_CELLS = {1: 64, 2: 64, 3: 16}
_ANGULAR_NODES = {2: 64, 3: 16}
DIVERGENCE_MARGIN = 0.01


def _sphere_rule(n: int) -> Tuple[np.ndarray, np.ndarray]:
    """S^{n-1} 上的方向与权重: n=2 等距 θ, n=3 cosθ 取 Gauss-Legendre、φ 等距"""
    if n == 2:
        m = _ANGULAR_NODES[2]
        theta = 2.0 * math.pi * np.arange(m) / m
        return np.stack([np.cos(theta), np.sin(theta)], axis=-1), np.full(m, 2.0 * math.pi / m)
    x, w = roots_legendre(_ANGULAR_NODES[3])
    m = 2 * _ANGULAR_NODES[3]
    phi = 2.0 * math.pi * np.arange(m) / m
    mu, ph = np.meshgrid(x, phi, indexing="ij")
    st = np.sqrt(1.0 - mu ** 2)
    dirs = np.stack([st * np.cos(ph), st * np.sin(ph), mu], axis=-1).reshape(-1, 3)
    return dirs, np.outer(w, np.full(m, 2.0 * math.pi / m)).ravel()


def _midpoint_integrals(fn: ScalarFn, center: np.ndarray, radius: float, inside: Optional[Callable],
                        levels: int = 4) -> List[float]:
    # nested midpoint sums: bounding cube when inside is given, polar cells on the ball otherwise
    n = center.size
    polar = inside is None and n >= 2
    if polar:
        dirs, dir_weights = _sphere_rule(n)
    out = []
    for k in range(levels):
        cells = _BASE_CELLS[n] * 2 ** k
        if polar:
            h = radius / cells
            r = h * (np.arange(cells) + 0.5)
            pts = (r[:, None, None] * dirs[None, :, :]).reshape(-1, n) + center
            weights = np.outer(h * r ** (n - 1), dir_weights).ravel()
            with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
                vals = fn(pts)
            out.append(float(np.sum(weights * vals)))
            continue
        h = 2.0 * radius / cells
        axis = -radius + h * (np.arange(cells) + 0.5)
        grids = np.meshgrid(*([axis] * n), indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=-1) + center
        mask = inside(pts) if inside is not None else np.ones(len(pts), dtype=bool)
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            vals = fn(pts[mask])
        out.append(float(np.sum(vals) * h ** n))
    return out


def membership_finite(fn: ScalarFn, center: np.ndarray, radius: float,
                      inside: Optional[Callable] = None,
                      margin: float = DIVERGENCE_MARGIN) -> Tuple[bool, float]:
    """
    判断 ∫ fn 是否有限: 嵌套中点和的增量必须按几何比 r < 1 收缩

    可积的奇点 |x|^{-γ} (γ < n) 给出 r = 2^{-(n-γ)}, 发散或临界奇点给出 r ≥ 1。
    只有连续两个比值都不小于 1 - margin 且增量同号时才判为发散, 因此
    n - γ 低于约 margin/ln2 的奇点无法与对数发散区分。

    Args:
        inside: 立方体 [center ± radius]^n 内的区域指示函数; None 表示球 B(center, radius)
        margin: 比值判据的余量

    Returns:
        (是否有限, 最细层的积分值)
    """
    sums = _midpoint_integrals(fn, center, radius, inside)
    if not all(np.isfinite(sums)):
        return False, float("inf")
    d = np.diff(sums)
    total = abs(sums[-1])
    if abs(d[-1]) <= 1e-10 * max(total, 1e-300):
        return True, sums[-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = d[1:] / d[:-1]
    stalled = bool(np.all(ratios[-2:] >= 1.0 - margin))
    if stalled:
        logger.debug("nested sums stall: increments %s", d.tolist())
    return not stalled, sums[-1]


def hypothesis_check(cs: CoefficientSet, mu: MeasureSpec, omega: Domain, delta: float,
                     R: float, C: float, p: float, box: Optional[Box] = None,
                     lattice: Optional[SampleLattice] = None, relax_at_one: bool = False,
                     strict: bool = True) -> EllipticityReport:
    """
    数值检查系数假设

    检查项: 椭圆包络与控制量在采样格上成立; Λ ∈ L¹(B_R); 在 B_R 外
    Λ(x) ≤ C|x|^p 且 p < n; λ^{-1} ∈ L^{1+δ}(Ω)。relax_at_one 为真且
    μ({1}) > 0 时跳过 δ 条件, 改为检查 λ^{-1} ∈ L¹(Ω)。

    Args:
        cs: 系数
        mu: 测度
        omega: 区域
        delta, R, C, p: 用户给出的候选值
        box: 采样点所在的计算盒子 (默认 Ω 的 4 倍直径嵌入, N=32)
        strict: 为真时任何失败都抛出 HypothesisViolation

    Returns:
        EllipticityReport
    """
    n = cs.n
    messages: List[str] = []
    if box is None:
        box = Box(n, 4.0 * omega.diameter(n), 32)
    lattice = lattice or default_lattice(n, box.points)
    relaxed = relax_at_one and mass_at_one(mu) > 0

    if delta < 0 or (delta == 0 and not relaxed):
        raise DomainError(f"delta must be positive, got {delta}")

    def fail(name, message, witness=None):
        messages.append(f"[{name}] {message}")
        if strict:
            raise HypothesisViolation(name, message, witness)

    K_A = cauchy_schwarz_constant(cs.A, lattice)

    X = lattice.points
    lam, Lam = cs.lam(X), cs.Lam(X)
    for s in lattice.s_values:
        q = np.einsum("di,pij,dj->pd", lattice.directions, cs.A(s, X), lattice.directions)
        low = q < lam[:, None] * (1.0 - 1e-12) - 1e-14
        high = q > Lam[:, None] * (1.0 + 1e-12) + 1e-14
        if np.any(low) or np.any(high):
            p_idx, d_idx = np.argwhere(low | high)[0]
            fail("ellipticity", "λ|ξ|² ≤ ξᵀAξ ≤ Λ|ξ|² violated",
                 {"s": s, "x": X[p_idx].tolist(), "xi": lattice.directions[d_idx].tolist()})
            break
        Bs = np.abs(np.linalg.inv(cs.A(s, X)))
        checks = (("a_domination", np.abs(cs.a_vec(s, X)) <= cs.a_bar(X) + 1e-14),
                  ("b_domination", np.abs(cs.b_vec(s, X)) <= cs.b_bar(X) + 1e-14),
                  ("B_domination", Bs <= cs.B_bar(X) * (1.0 + 1e-12) + 1e-14))
        for name, ok in checks:
            if not np.all(ok):
                k = int(np.argwhere(~ok)[0][0])
                fail(name, "coefficient exceeds its dominating function", {"s": s, "x": X[k].tolist()})

    growth_ok = True
    if p >= n:
        growth_ok = False
        fail("growth", f"growth exponent p={p} must satisfy p < n={n}")

    center = np.zeros(n)
    Lam_finite, Lam_int = membership_finite(cs.Lam, center, R)
    if not Lam_finite:
        growth_ok = False
        fail("Lambda_L1", f"Λ is not integrable on B_{R}")

    far = box.points[np.linalg.norm(box.points, axis=-1) >= R]
    if far.size:
        r = np.linalg.norm(far, axis=-1)
        bad = cs.Lam(far) > C * r ** p * (1.0 + 1e-12)
        if np.any(bad):
            growth_ok = False
            fail("growth", f"Λ(x) ≤ {C}|x|^{p} violated outside B_{R}",
                 {"x": far[int(np.argmax(bad))].tolist()})

    exponent = 1.0 if relaxed else 1.0 + delta
    om_center = np.asarray(omega.center) if omega.center else center
    inside = None if omega.shape == "ball" else (lambda P: omega.distance_inside(P) > 0)
    inv_finite, inv_int = membership_finite(lambda P: cs.lam(P) ** (-exponent), om_center,
                                            omega.radius, inside)
    if not inv_finite:
        fail("lambda_inverse", f"λ^-1 is not in L^{exponent:g}(Ω)")
    if relaxed:
        messages.append("μ({1}) > 0: δ-condition replaced by λ^-1 ∈ L¹(Ω)")

    report = EllipticityReport(
        K_A=K_A, delta=delta, growth_ok=growth_ok, local_integrability_ok=inv_finite,
        p_delta=p_delta(delta), relaxed=relaxed, lambda_inv_integral=inv_int,
        Lambda_integral=Lam_int, messages=messages)
    logger.info("hypothesis check %s: K_A=%.4g ok=%s", cs.label, K_A, report.ok)
    return report


# -- compact boundedness: exponent predicates -------------------------------------

@dataclass
class CompactnessVerdict:
    passed: bool
    delta_threshold: float
    q_threshold: float
    reasons: List[str] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.passed


def compact_boundedness_sufficient(f_norms: Dict[str, float], delta: float, S0: float, n: int,
                                   q: float) -> CompactnessVerdict:
    """
    f ∈ L^q(Ω), f^{-1} ∈ L¹(Ω) 时紧有界性的指数判据

    n ≥ 2: δ > (n - 2S₀)/(2S₀) 且 q > n(1+δ)/(2S₀(1+δ) - n);
    n = 1: δ(2S₀ - 1) > 2(1 - S₀) 且 q > 1。

    Args:
        f_norms: {"Lq": ‖f‖_q, "inv_L1": ‖f^{-1}‖_1}
    """
    reasons = []
    for key in ("Lq", "inv_L1"):
        value = f_norms.get(key)
        if value is None or not np.isfinite(value):
            reasons.append(f"{key} norm is not finite")

    if n == 1:
        lhs, rhs = delta * (2.0 * S0 - 1.0), 2.0 * (1.0 - S0)
        d_ok = lhs > rhs
        d_thr = rhs / (2.0 * S0 - 1.0) if 2.0 * S0 - 1.0 > 0 else float("inf")
        q_thr = 1.0
        if not d_ok:
            reasons.append(f"δ(2S₀-1) = {lhs:.6g} ≤ 2(1-S₀) = {rhs:.6g}")
    else:
        d_thr = (n - 2.0 * S0) / (2.0 * S0)
        d_ok = delta > d_thr
        denom = 2.0 * S0 * (1.0 + delta) - n
        q_thr = n * (1.0 + delta) / denom if denom > 0 else float("inf")
        if not d_ok:
            reasons.append(f"δ = {delta:.6g} ≤ (n-2S₀)/(2S₀) = {d_thr:.6g}")
    q_ok = q > q_thr
    if not q_ok:
        reasons.append(f"q = {q:.6g} ≤ threshold {q_thr:.6g}")
    return CompactnessVerdict(not reasons, d_thr, q_thr, reasons)


def llogl_integral(f: GridFunction, omega: Domain) -> float:
    """∫_Ω f log(1 + f)"""
    vals = np.abs(f.values)
    return GridFunction(f.box, vals * np.log1p(vals)).integral(omega.mask(f.box))


def classical_compact_boundedness(t: float, n: int, f: Optional[GridFunction] = None,
                                  omega: Optional[Domain] = None) -> Dict[str, Any]:
    """
    μ({1}) > 0 时的充分条件: λ^{-1} ∈ L^t 且 f ∈ L^r, 1/t + 1/r = 2/n;
    t = ∞, n = 2 时改为 f ∈ L log L, 返回网格积分 ∫ f log(1+f)。
    """
    inv_t = 0.0 if np.isinf(t) else 1.0 / t
    out: Dict[str, Any] = {"t": t, "n": n}
    if n == 2 and inv_t == 0.0:
        out["condition"] = "LlogL"
        if f is not None and omega is not None:
            out["llogl"] = llogl_integral(f, omega)
        return out
    inv_r = 2.0 / n - inv_t
    out["condition"] = "Lr"
    out["r"] = 1.0 / inv_r if inv_r > 0 else float("inf")
    if inv_r > 1.0:
        out["r"] = 1.0
    return out


# -- boundedness probe ------------------------------------------------------------

@dataclass
class BoundednessRecord:
    """有界常数 sup ∫fφ²/‖φ‖²_{H⁰} 以及每个 ε 的最小 K_ε"""

    constant: float
    k_eps: Dict[float, float]
    members: List[Dict[str, float]] = field(default_factory=list)


def boundedness_probe(f: GridFunction, g: Optional[GridFunction], basis_family: Sequence[GridFunction],
                      h0_seminorm: Callable[[GridFunction], float], omega: Optional[Domain] = None,
                      eps_values: Sequence[float] = (1.0, 0.1, 0.01)) -> BoundednessRecord:
    """
    在函数族上估计 f 的有界常数以及紧有界不等式中的 K_ε

    ‖φ‖²_{H⁰(A,g,Ω)} = h0_seminorm(φ)² + ∫_Ω g φ²;
    K_ε = max_φ max(0, (‖φ‖²_{L²(f)} - ε‖φ‖²_{H⁰}) / ‖φ‖²_{L¹})。
    """
    members = []
    for phi in basis_family:
        mask = omega.mask(phi.box) if omega is not None else None
        weighted = (f * phi * phi).integral(mask)
        h0_sq = h0_seminorm(phi) ** 2
        if g is not None:
            h0_sq += (g * phi * phi).integral(mask)
        l1 = phi.lp_norm(1.0, mask)
        members.append({"weighted": weighted, "h0_sq": h0_sq, "l1": l1})

    constant = max((m["weighted"] / m["h0_sq"] for m in members if m["h0_sq"] > 0), default=0.0)
    k_eps = {}
    for eps in eps_values:
        need = [max(0.0, (m["weighted"] - eps * m["h0_sq"]) / m["l1"] ** 2) for m in members if m["l1"] > 0]
        k_eps[float(eps)] = max(need, default=0.0)
    return BoundednessRecord(constant, k_eps, members)
