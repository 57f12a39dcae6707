# grid_spectral.py
"""
计算盒子、网格函数与 Fourier 乘子。

盒子是 [-L, L)^n 上的均匀周期网格, x_k = -L + k·h, h = 2L/N;
频率格点 ξ_k = k/(2L), k ∈ {-N/2, ..., N/2-1}。所有谱算子都经由
apply_multiplier 实现。
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Tuple

import numpy as np
import scipy.fft

from src.core.errors import DomainError, GridMismatchError, RealityLossError
from src.core.special_functions import SUPPORTED_DIMENSIONS
from src.utils.utils import thread_cap

logger = logging.getLogger(__name__)

REALITY_TOLERANCE = 1e-9


@dataclass(frozen=True)
class Box:
    """均匀周期计算盒子 [-L, L)^n, 每个轴 N 个点"""

    n: int
    half_width: float
    points_per_axis: int

    def __post_init__(self):
        if self.n not in SUPPORTED_DIMENSIONS:
            raise DomainError(f"dimension n={self.n} not supported (allowed: {SUPPORTED_DIMENSIONS})")
        if not self.half_width > 0:
            raise DomainError(f"half_width must be positive, got {self.half_width}")
        N = self.points_per_axis
        if int(N) != N or N < 8 or N % 2:
            raise DomainError(f"points_per_axis must be an even integer >= 8, got {N}")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.points_per_axis

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.n

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.points_per_axis,) * self.n

    @cached_property
    def axis(self) -> np.ndarray:
        return -self.half_width + self.spacing * np.arange(self.points_per_axis)

    @cached_property
    def mesh(self) -> Tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*([self.axis] * self.n), indexing="ij"))

    @cached_property
    def points(self) -> np.ndarray:
        """所有网格点, 形状 (N^n, n), 按字典序排列"""
        return np.stack([m.ravel() for m in self.mesh], axis=-1)

    @cached_property
    def radius(self) -> np.ndarray:
        return np.sqrt(sum(m ** 2 for m in self.mesh))

    @cached_property
    def frequency_axis(self) -> np.ndarray:
        return scipy.fft.fftfreq(self.points_per_axis, d=self.spacing)

    @cached_property
    def frequencies(self) -> Tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*([self.frequency_axis] * self.n), indexing="ij"))

    @cached_property
    def frequency_norm(self) -> np.ndarray:
        return np.sqrt(sum(k ** 2 for k in self.frequencies))

    @cached_property
    def nyquist_masks(self) -> Tuple[np.ndarray, ...]:
        # the -N/2 mode has no conjugate partner along its own axis
        nyq = -self.points_per_axis // 2 / (2.0 * self.half_width)
        return tuple(np.isclose(k, nyq) for k in self.frequencies)

    def zeros(self) -> "GridFunction":
        return GridFunction(self, np.zeros(self.shape))

    def sample(self, fn: Callable[[np.ndarray], np.ndarray]) -> "GridFunction":
        """在所有网格点上对向量化函数 fn((P, n)) 取样"""
        values = np.asarray(fn(self.points), dtype=float).reshape(self.shape)
        return GridFunction(self, values)

    def contracted(self, factor: float) -> "Box":
        return Box(self.n, self.half_width / factor, self.points_per_axis)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """盒子上的实值网格函数, values 形状为 (N,)*n"""

    box: Box
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.box.shape:
            if values.size != self.box.points_per_axis ** self.box.n:
                raise GridMismatchError(
                    f"values of size {values.size} do not fit box shape {self.box.shape}")
            values = values.reshape(self.box.shape)
        if not np.all(np.isfinite(values)):
            raise ValueError("GridFunction values must be finite")
        object.__setattr__(self, "values", values)

    def _check(self, other: "GridFunction") -> None:
        if other.box != self.box:
            raise GridMismatchError(f"cannot combine grid functions on {self.box} and {other.box}")

    def __add__(self, other):
        if isinstance(other, GridFunction):
            self._check(other)
            return GridFunction(self.box, self.values + other.values)
        return GridFunction(self.box, self.values + other)

    def __sub__(self, other):
        if isinstance(other, GridFunction):
            self._check(other)
            return GridFunction(self.box, self.values - other.values)
        return GridFunction(self.box, self.values - other)

    def __mul__(self, other):
        if isinstance(other, GridFunction):
            self._check(other)
            return GridFunction(self.box, self.values * other.values)
        return GridFunction(self.box, self.values * other)

    __rmul__ = __mul__

    def __neg__(self):
        return GridFunction(self.box, -self.values)

    def integral(self, mask: Optional[np.ndarray] = None) -> float:
        """网格求积 (周期网格上等价于梯形公式)"""
        vals = self.values if mask is None else np.where(mask, self.values, 0.0)
        return float(np.sum(vals) * self.box.cell_volume)

    def lp_norm(self, p: float, mask: Optional[np.ndarray] = None) -> float:
        vals = np.abs(self.values)
        if mask is not None:
            vals = np.where(mask, vals, 0.0)
        if np.isinf(p):
            return float(np.max(vals))
        return float((np.sum(vals ** p) * self.box.cell_volume) ** (1.0 / p))

    def max_abs(self, mask: Optional[np.ndarray] = None) -> float:
        return self.lp_norm(np.inf, mask)


@dataclass(frozen=True)
class Multiplier:
    """
    Fourier 乘子: symbol 接收频率分量元组 (ξ_1, ..., ξ_n) 返回复数组。

    odd_axes 中列出的轴上 Nyquist 模式被置零, 这些轴上符号是奇函数,
    否则输出不再是实值。
    """

    symbol: Callable[[Tuple[np.ndarray, ...]], np.ndarray]
    odd_axes: Tuple[int, ...] = field(default=())

    def evaluate(self, box: Box) -> np.ndarray:
        values = np.broadcast_to(np.asarray(self.symbol(box.frequencies), dtype=complex), box.shape).copy()
        for axis in self.odd_axes:
            values[box.nyquist_masks[axis]] = 0.0
        return values

    def __mul__(self, other: "Multiplier") -> "Multiplier":
        a, b = self, other
        return Multiplier(lambda xi: a.symbol(xi) * b.symbol(xi),
                          tuple(sorted(set(a.odd_axes) | set(b.odd_axes))))


def forward(u: GridFunction, threads: Optional[int] = None) -> np.ndarray:
    return scipy.fft.fftn(u.values, workers=thread_cap(threads))


def inverse(u_hat: np.ndarray, box: Box, threads: Optional[int] = None) -> np.ndarray:
    return scipy.fft.ifftn(u_hat, s=box.shape, workers=thread_cap(threads))


def transform_roundtrip(u: GridFunction) -> GridFunction:
    """inverse(forward(u)), 用于检验变换约定"""
    return GridFunction(u.box, inverse(forward(u), u.box).real)


def _real_part(values: np.ndarray) -> np.ndarray:
    scale = max(1.0, float(np.max(np.abs(values.real))) if values.size else 1.0)
    residue = float(np.max(np.abs(values.imag))) if values.size else 0.0
    if residue > REALITY_TOLERANCE * scale:
        raise RealityLossError(residue, REALITY_TOLERANCE)
    return values.real


def apply_symbol(u: GridFunction, symbol: np.ndarray, threads: Optional[int] = None) -> GridFunction:
    """对已在频率网格上求值的符号数组做乘子运算"""
    out = inverse(symbol * forward(u, threads), u.box, threads)
    return GridFunction(u.box, _real_part(out))


def apply_multiplier(u: GridFunction, m: Multiplier, threads: Optional[int] = None) -> GridFunction:
    """
    返回 m(ξ)·û(ξ) 的逆变换

    Args:
        u: 网格函数
        m: 共轭对称的乘子

    Returns:
        GridFunction: 实值结果

    Raises:
        RealityLossError: 虚部残差超过 1e-9
    """
    return apply_symbol(u, m.evaluate(u.box), threads)


def parseval_gap(u: GridFunction) -> float:
    """|Σ|u|² - Σ|û|²/N^n| 的相对值"""
    u_hat = forward(u)
    lhs = float(np.sum(u.values ** 2))
    rhs = float(np.sum(np.abs(u_hat) ** 2)) / u.values.size
    return abs(lhs - rhs) / max(lhs, 1e-300)


@dataclass(frozen=True)
class Domain:
    """
    问题区域 Ω: interval / box (中心 + 半宽) 或 ball (中心 + 半径)

    函数在 Ω 外按零延拓嵌入计算盒子。
    """

    shape: str
    radius: float
    center: Tuple[float, ...] = ()

    def __post_init__(self):
        if self.shape not in ("interval", "box", "ball"):
            raise DomainError(f"unknown domain shape {self.shape!r}")
        if not self.radius > 0:
            raise DomainError(f"domain radius must be positive, got {self.radius}")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    def _center(self, n: int) -> np.ndarray:
        if not self.center:
            return np.zeros(n)
        if len(self.center) != n:
            raise DomainError(f"domain center {self.center} does not match dimension {n}")
        return np.asarray(self.center)

    def diameter(self, n: int) -> float:
        if self.shape == "ball" or n == 1:
            return 2.0 * self.radius
        return 2.0 * self.radius * np.sqrt(n)

    def distance_inside(self, points: np.ndarray) -> np.ndarray:
        """点到 ∂Ω 的 (带符号) 距离, 在 Ω 内为正"""
        rel = points - self._center(points.shape[-1])
        if self.shape == "ball":
            return self.radius - np.linalg.norm(rel, axis=-1)
        return self.radius - np.max(np.abs(rel), axis=-1)

    def mask(self, box: Box, margin_cells: float = 0.0) -> np.ndarray:
        dist = self.distance_inside(box.points).reshape(box.shape)
        if margin_cells == 0:
            return dist > 0
        return dist >= margin_cells * box.spacing - 1e-12 * box.spacing

    def check_embedding(self, box: Box, margin_factor: float = 3.0) -> None:
        """Ω 到盒子边界的距离至少为 margin_factor·diam(Ω)"""
        c = self._center(box.n)
        reach = float(np.max(np.abs(c))) + self.radius
        margin = box.half_width - reach
        needed = margin_factor * self.diameter(box.n)
        if margin < needed:
            raise DomainError(
                f"domain needs margin {needed:.3g} inside box of half-width {box.half_width}, has {margin:.3g}")


def supported_in(u: GridFunction, omega: Domain, atol: float = 0.0) -> bool:
    outside = ~omega.mask(u.box)
    return bool(np.all(np.abs(u.values[outside]) <= atol))


def embed_box(omega: Domain, n: int, points_per_axis: int, factor: float = 4.0) -> Box:
    """按 L = factor·diam(Ω) 构造计算盒子"""
    return Box(n, factor * omega.diameter(n), points_per_axis)
