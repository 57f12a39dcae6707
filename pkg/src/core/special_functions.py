# special_functions.py
"""
Gamma 函数以及分数阶梯度、Riesz 位势相关的常数和闭式积分恒等式。

这一层是其他模块的解析参照: 所有常数都由这里的 gamma 计算, 测试再用
scipy.special / scipy.integrate 作为独立参照核对。
"""

import logging
import math
from typing import Sequence, Tuple, Union

import numpy as np
from scipy.special import roots_legendre

from src.core.errors import DomainError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

# Lanczos approximation, g = 607/128, fifteen terms (Godfrey)
_LANCZOS_G = 607.0 / 128.0
_LANCZOS_COEFFS = np.array([
    0.99999999999999709182,
    57.156235665862923517,
    -59.597960355475491248,
    14.136097974741747174,
    -0.49191381609762019978,
    0.33994649984811888699e-4,
    0.46523628927048575665e-4,
    -0.98374475304879564677e-4,
    0.15808870322491248884e-3,
    -0.21026444172410488319e-3,
    0.21743961811521264320e-3,
    -0.16431810653676389022e-3,
    0.84418223983852743293e-4,
    -0.26190838401581408670e-4,
    0.36899182659531622704e-5,
])

SUPPORTED_DIMENSIONS = (1, 2, 3)


def _lanczos(x: np.ndarray) -> np.ndarray:
    # valid for x >= 0.5
    acc = np.full_like(x, _LANCZOS_COEFFS[0])
    for k in range(1, len(_LANCZOS_COEFFS)):
        acc = acc + _LANCZOS_COEFFS[k] / (x + k)
    t = x + _LANCZOS_G + 0.5
    return math.sqrt(2.0 * math.pi) * acc / x * np.exp((x + 0.5) * np.log(t) - t)


def gamma(x: ArrayLike) -> ArrayLike:
    """
    Euler Gamma 函数 (Lanczos 近似 + 反射公式)

    Args:
        x: 正实数或正实数数组

    Returns:
        Γ(x), 与输入形状一致

    Raises:
        DomainError: x ≤ 0 或非有限值
    """
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
        raise DomainError(f"gamma requires finite x > 0, got {x}")

    out = np.empty_like(arr)
    small = arr < 0.5
    if np.any(~small):
        out[~small] = _lanczos(arr[~small])
    if np.any(small):
        xs = arr[small]
        out[small] = math.pi / (np.sin(math.pi * xs) * _lanczos(1.0 - xs))

    if np.ndim(x) == 0:
        return float(out[0])
    return out.reshape(np.shape(x))


def check_dimension(n: int) -> int:
    if int(n) != n or n < 1:
        raise DomainError(f"dimension must be a positive integer, got {n}")
    return int(n)


def unit_ball_volume(n: int) -> float:
    """ω_n = π^{n/2} / Γ(n/2 + 1)"""
    n = check_dimension(n)
    return math.pi ** (n / 2.0) / gamma(n / 2.0 + 1.0)


def sphere_area(n: int) -> float:
    """|S^{n-1}| = n·ω_n; 对 n=1 为两点, 面积 2"""
    return check_dimension(n) * unit_ball_volume(n)


def grad_constant(s: float, n: int) -> float:
    """
    分数阶梯度的归一化常数 c_{s,n}

    Args:
        s: 阶数, s ∈ [-1, 1]; s = 1 返回极点极限 0
        n: 空间维数

    Returns:
        c_{s,n} = 2^s π^{-n/2} Γ((n+s+1)/2) / Γ((1-s)/2)
    """
    n = check_dimension(n)
    if not (-1.0 <= s <= 1.0):
        raise DomainError(f"grad_constant requires s in [-1, 1], got {s}")
    if s == 1.0:
        return 0.0
    return (2.0 ** s) * math.pi ** (-n / 2.0) * gamma((n + s + 1.0) / 2.0) / gamma((1.0 - s) / 2.0)


def grad_constant_ratio_sup(n: int, step: float = 1e-3) -> Tuple[float, float]:
    """
    在 [-1, 1) 的均匀网格上记录 c_s/(1-s) 的经验上确界

    Returns:
        (sup 值, 取到 sup 的 s)
    """
    n = check_dimension(n)
    s_values = np.arange(-1.0, 1.0, step)
    ratios = np.array([grad_constant(float(s), n) / (1.0 - s) for s in s_values])
    k = int(np.argmax(ratios))
    return float(ratios[k]), float(s_values[k])


def riesz_constant(alpha: float, n: int) -> float:
    """
    Riesz 位势核的归一化常数 γ_{α,n}

    Args:
        alpha: α ∈ (0, 1)
        n: 空间维数

    Returns:
        γ_{α,n} = 2^α π^{n/2} Γ(α/2) / Γ((n-α)/2)
    """
    n = check_dimension(n)
    if not (0.0 < alpha < 1.0):
        raise DomainError(f"riesz_constant requires alpha in (0, 1), got {alpha}")
    return (2.0 ** alpha) * math.pi ** (n / 2.0) * gamma(alpha / 2.0) / gamma((n - alpha) / 2.0)


def _check_open_unit(name: str, s: float) -> None:
    if not (0.0 < s < 1.0):
        raise DomainError(f"{name} requires s in (0, 1), got {s}")


def sinc_moment(s: float) -> float:
    """∫_0^∞ sin(t)/t^{1+s} dt = Γ((1+s)/2)Γ((1-s)/2) / (2Γ(1+s))"""
    _check_open_unit("sinc_moment", s)
    return gamma((1.0 + s) / 2.0) * gamma((1.0 - s) / 2.0) / (2.0 * gamma(1.0 + s))


def sinc_moment_panels(s: float, panels: int = 60, nodes: int = 24, depth: int = 24) -> float:
    """
    ∫_0^∞ sin(t)/t^{1+s} dt 的直接数值求积, 作为闭式的独立参照

    第一段 [0, π] 用 t = π·u^{1/(1-s)} 消去 t^{-s} 奇性; 之后每个半周期一个
    Gauss-Legendre 面板, 得到交错级数, 对部分和做重复平均加速。
    """
    _check_open_unit("sinc_moment_panels", s)
    x, w = roots_legendre(nodes)
    u = 0.5 * (x + 1.0)
    wu = 0.5 * w

    # first panel
    t = math.pi * u ** (1.0 / (1.0 - s))
    jac = math.pi ** (1.0 - s) / (1.0 - s)
    head = jac * float(np.sum(wu * np.sinc(t / math.pi)))

    partial = []
    total = head
    for k in range(1, panels + 1):
        a = k * math.pi
        tk = a + math.pi * u
        total += math.pi * float(np.sum(wu * np.sin(tk) / tk ** (1.0 + s)))
        partial.append(total)

    sums = np.array(partial[-(depth + 1):])
    for _ in range(depth):
        sums = 0.5 * (sums[1:] + sums[:-1])
    return float(sums[-1])


def sphere_moment(s: float, n: int) -> float:
    """
    ∫_{∂B_1} |ω_1|^{1+s} dH^{n-1} = 2π^{(n-1)/2} Γ((s+2)/2) / Γ((n+s+1)/2)

    n = 1 时球面是两点 {±1}, 公式给出退化和 2, 直接返回该值。
    """
    _check_open_unit("sphere_moment", s)
    n = check_dimension(n)
    if n == 1:
        return 2.0
    return 2.0 * math.pi ** ((n - 1) / 2.0) * gamma((s + 2.0) / 2.0) / gamma((n + s + 1.0) / 2.0)


def fourier_symbol_integral(xi: Sequence[float], s: float, j: int) -> float:
    """
    ∫_{R^n} sin(ξ·t) t_j |t|^{-(n+s+1)} dt 的闭式

    Args:
        xi: 频率向量 ξ ∈ R^n
        s: 阶数 s ∈ (0, 1)
        j: 分量下标 (从 0 开始)

    Returns:
        2^{-s} π^{n/2} |ξ|^{s-1} ξ_j Γ((1-s)/2) / Γ((n+s+1)/2); ξ = 0 时为 0
    """
    _check_open_unit("fourier_symbol_integral", s)
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    n = check_dimension(xi.size)
    if not 0 <= j < n:
        raise DomainError(f"axis index {j} out of range for n={n}")
    norm = float(np.linalg.norm(xi))
    if norm == 0.0 or xi[j] == 0.0:
        return 0.0
    return (2.0 ** (-s) * math.pi ** (n / 2.0) * norm ** (s - 1.0) * xi[j]
            * gamma((1.0 - s) / 2.0) / gamma((n + s + 1.0) / 2.0))
