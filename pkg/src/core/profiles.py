# profiles.py
"""
紧支撑光滑测试函数以及固定的 10 个函数的探针族。

每个 profile 都是对 (P, n) 点数组向量化的可调用对象, 带解析梯度和
支撑半径, 既能在网格上取样, 也能交给奇异积分求积使用。
"""

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from src.core.grid_spectral import Box, Domain, GridFunction

CANONICAL_SEED = 20240611
FAMILY_SIZE = 10


def _plateau(r: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """ψ(r) = exp(1 - 1/(1-r²)) on r < 1, and dψ/dr"""
    inside = r < 1.0
    q = np.where(inside, 1.0 - r ** 2, 1.0)
    psi = np.where(inside, np.exp(1.0 - 1.0 / q), 0.0)
    dpsi = np.where(inside, psi * (-2.0 * r / q ** 2), 0.0)
    return psi, dpsi


@dataclass(frozen=True)
class SmoothBump:
    """
    u(x) = height · P(y) · ψ(|y|), y = (x - center)/radius

    P(y) = 1 + b·y + yᵀCy, ψ 为 C^∞ 平台函数。
    """

    center: Tuple[float, ...]
    radius: float
    height: float = 1.0
    linear: Tuple[float, ...] = ()
    quadratic: Tuple[Tuple[float, ...], ...] = ()

    @property
    def n(self) -> int:
        return len(self.center)

    @property
    def support_radius(self) -> float:
        """以原点为中心、包含支撑的球半径 R̄"""
        return float(np.linalg.norm(self.center)) + self.radius

    def _coeffs(self):
        b = np.asarray(self.linear, dtype=float) if self.linear else np.zeros(self.n)
        C = np.asarray(self.quadratic, dtype=float) if self.quadratic else np.zeros((self.n, self.n))
        return b, 0.5 * (C + C.T)

    def __call__(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        y = (points - np.asarray(self.center)) / self.radius
        b, C = self._coeffs()
        poly = 1.0 + y @ b + np.einsum("pi,ij,pj->p", y, C, y)
        psi, _ = _plateau(np.linalg.norm(y, axis=-1))
        return self.height * poly * psi

    def gradient(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        y = (points - np.asarray(self.center)) / self.radius
        b, C = self._coeffs()
        poly = 1.0 + y @ b + np.einsum("pi,ij,pj->p", y, C, y)
        r = np.linalg.norm(y, axis=-1)
        psi, dpsi = _plateau(r)
        safe_r = np.where(r > 0, r, 1.0)
        grad_psi = (dpsi / safe_r)[:, None] * y
        grad_poly = b[None, :] + 2.0 * y @ C
        return self.height * (grad_poly * psi[:, None] + poly[:, None] * grad_psi) / self.radius

    def sample(self, box: Box) -> GridFunction:
        return box.sample(self)

    def scaled(self, factor: float) -> "SmoothBump":
        return SmoothBump(self.center, self.radius, self.height * factor, self.linear, self.quadratic)


@dataclass(frozen=True)
class PolynomialBump:
    """u(x) = (1 - |x|²/ρ²)^k 在 |x| < ρ, 否则 0 (C^{k-1})"""

    n: int
    radius: float = 1.0
    power: int = 3

    @property
    def support_radius(self) -> float:
        return self.radius

    def __call__(self, points: np.ndarray) -> np.ndarray:
        q = 1.0 - np.sum(np.atleast_2d(points) ** 2, axis=-1) / self.radius ** 2
        return np.where(q > 0, q, 0.0) ** self.power

    def gradient(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        q = 1.0 - np.sum(points ** 2, axis=-1) / self.radius ** 2
        coef = np.where(q > 0, -2.0 * self.power * np.where(q > 0, q, 0.0) ** (self.power - 1), 0.0)
        return coef[:, None] * points / self.radius ** 2

    def sample(self, box: Box) -> GridFunction:
        return box.sample(self)


@dataclass(frozen=True)
class Gaussian:
    """u(x) = exp(-π|x|²/w²); 支撑半径取 w·6 (此处函数值 < 1e-48)"""

    n: int
    width: float = 1.0

    @property
    def support_radius(self) -> float:
        return 6.0 * self.width

    def __call__(self, points: np.ndarray) -> np.ndarray:
        return np.exp(-np.pi * np.sum(np.atleast_2d(points) ** 2, axis=-1) / self.width ** 2)

    def gradient(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        return (-2.0 * np.pi / self.width ** 2) * points * self(points)[:, None]

    def sample(self, box: Box) -> GridFunction:
        return box.sample(self)


def canonical_family(n: int, omega: Optional[Domain] = None, seed: int = CANONICAL_SEED,
                     size: int = FAMILY_SIZE) -> List[SmoothBump]:
    """
    固定的探针函数族: size 个带多项式因子的平台函数, 支撑全部落在 Ω 内

    Args:
        n: 维数
        omega: 区域, 默认 (-1,1)^n 的单位球/区间
        seed: 随机种子 (默认即仓库公布的种子)
        size: 函数个数

    Returns:
        List[SmoothBump]
    """
    omega = omega or Domain("interval" if n == 1 else "ball", 1.0)
    center0 = np.asarray(omega.center) if omega.center else np.zeros(n)
    rng = np.random.default_rng(seed)
    family = []
    for k in range(size):
        radius = omega.radius * rng.uniform(0.35, 0.75)
        slack = omega.radius - radius
        # keep |offset| small enough for both ball and box shapes
        direction = rng.normal(size=n)
        direction /= max(np.linalg.norm(direction), 1e-12)
        offset = direction * rng.uniform(0.0, 0.8) * slack
        linear = tuple(rng.uniform(-0.5, 0.5, size=n))
        quad = rng.uniform(-0.3, 0.3, size=(n, n))
        family.append(SmoothBump(
            center=tuple(center0 + offset),
            radius=float(radius),
            height=float(rng.uniform(0.5, 2.0)),
            linear=linear,
            quadratic=tuple(tuple(row) for row in quad),
        ))
    return family
