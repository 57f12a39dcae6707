# measure_mu.py
"""
(0,1] 上混合阶数的测度 μ: 原子 + 分段线性密度, 以及 s-积分的求积。
"""

import logging
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import roots_legendre

from src.core.errors import ConfigError, DomainError

logger = logging.getLogger(__name__)

DEFAULT_NODES = 16


@dataclass(frozen=True)
class DensitySpec:
    """
    [s₀, S₀] 上的分段线性密度, 由断点 s_values 和值 values 给出

    kind 为 "constant" 时只有两个断点且两端值相同。
    """

    s_values: Tuple[float, ...]
    values: Tuple[float, ...]
    kind: str = "table"

    def __post_init__(self):
        s = np.asarray(self.s_values, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if s.size < 2 or s.size != v.size:
            raise DomainError("density table needs at least two breakpoints with one value each")
        if np.any(np.diff(s) <= 0):
            raise DomainError(f"density breakpoints must be strictly increasing, got {self.s_values}")
        if s[0] <= 0.0 or s[-1] > 1.0:
            raise DomainError(f"density support must lie in (0, 1], got [{s[0]}, {s[-1]}]")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise DomainError("density values must be finite and nonnegative")

    @property
    def support(self) -> Tuple[float, float]:
        return float(self.s_values[0]), float(self.s_values[-1])

    def __call__(self, s: np.ndarray) -> np.ndarray:
        return np.interp(s, self.s_values, self.values)

    def nodes(self, count: int) -> Tuple[np.ndarray, np.ndarray]:
        """每个线性段上 count 个 Gauss-Legendre 节点, 权重已乘上密度"""
        x, w = roots_legendre(count)
        nodes, weights = [], []
        for a, b in zip(self.s_values[:-1], self.s_values[1:]):
            s = 0.5 * (b - a) * (x + 1.0) + a
            nodes.append(s)
            weights.append(0.5 * (b - a) * w * self(s))
        return np.concatenate(nodes), np.concatenate(weights)


@dataclass(frozen=True)
class MeasureSpec:
    """
    μ = Σ_k w_k δ(s_k) + φ(s) ds

    Attributes:
        atoms: ((s_k, w_k), ...), s_k ∈ (0, 1], w_k > 0
        density: 可选的分段线性密度
        nodes: 每个密度段的求积节点数
        truncated_mass: 截断级数时舍去的质量上界 Σ_{k>K} c_k
        label: 预设名称, 写入输出便于复现
    """

    atoms: Tuple[Tuple[float, float], ...] = ()
    density: Optional[DensitySpec] = None
    nodes: int = DEFAULT_NODES
    truncated_mass: float = 0.0
    label: str = "custom"

    def __post_init__(self):
        atoms = tuple((float(s), float(w)) for s, w in self.atoms)
        for s, w in atoms:
            if not 0.0 < s <= 1.0:
                raise DomainError(f"atom order {s} outside (0, 1]")
            if not w > 0.0:
                raise DomainError(f"atom weight {w} at s={s} must be positive")
        object.__setattr__(self, "atoms", atoms)
        if self.nodes < 1:
            raise DomainError(f"density node count must be positive, got {self.nodes}")
        if not atoms and self.density is None:
            raise DomainError("measure has neither atoms nor density")
        mass = total_mass(self)
        if not (np.isfinite(mass) and mass > 0):
            raise DomainError(f"total mass must be finite and positive, got {mass}")

    @property
    def support_min(self) -> float:
        candidates = [s for s, _ in self.atoms]
        if self.density is not None:
            candidates.append(self.density.support[0])
        return min(candidates)

    @property
    def support_max(self) -> float:
        candidates = [s for s, _ in self.atoms]
        if self.density is not None:
            candidates.append(self.density.support[1])
        return max(candidates)

    def quadrature(self) -> List[Tuple[float, float]]:
        """(s, 权重) 列表: 先原子, 再密度节点; 顺序固定"""
        pairs = list(self.atoms)
        if self.density is not None:
            s, w = self.density.nodes(self.nodes)
            pairs.extend((float(a), float(b)) for a, b in zip(s, w) if b != 0.0)
        return pairs

    def refined(self, factor: int = 2) -> "MeasureSpec":
        return MeasureSpec(self.atoms, self.density, self.nodes * factor, self.truncated_mass, self.label)


def integrate(F: Callable[[float], Any], mu: MeasureSpec) -> Any:
    """
    ∫_{(0,1]} F(s) dμ(s)

    Args:
        F: s ↦ 实数、数组或支持 + 与标量乘法的网格对象
        mu: 测度

    Returns:
        原子上的精确加权和加上密度的 Gauss-Legendre 求积
    """
    total = None
    for s, w in mu.quadrature():
        term = F(s) * w
        total = term if total is None else total + term
    return total


def total_mass(mu: MeasureSpec) -> float:
    """μ((0,1])"""
    mass = sum(w for _, w in mu.atoms)
    if mu.density is not None:
        s = np.asarray(mu.density.s_values)
        v = np.asarray(mu.density.values)
        mass += float(np.sum(0.5 * (v[1:] + v[:-1]) * np.diff(s)))
    return float(mass)


def mass_at_one(mu: MeasureSpec) -> float:
    """μ({1}), 密度对点质量没有贡献"""
    return float(sum(w for s, w in mu.atoms if s == 1.0))


# -- presets -----------------------------------------------------------------------

def dirac(s: float = 1.0, weight: float = 1.0) -> MeasureSpec:
    """μ = weight·δ(s); s = 1 即经典散度型算子"""
    return MeasureSpec(atoms=((s, weight),), label=f"dirac({s})")


def mixed_local_nonlocal(orders: Sequence[float], varsigma: float) -> MeasureSpec:
    """μ = Σ_k δ(s_k) + ς δ(1)"""
    atoms = [(float(s), 1.0) for s in orders]
    if varsigma > 0:
        atoms.append((1.0, float(varsigma)))
    return MeasureSpec(atoms=tuple(atoms), label="mixed_local_nonlocal")


def truncated_series(K: int, coefficients: Optional[Callable[[int], float]] = None,
                     tail_mass: Optional[float] = None) -> MeasureSpec:
    """
    μ = Σ_{k=2}^{K} c_k δ(1 - 1/k), 默认 c_k = 2^{-k}

    Args:
        K: 截断位置
        coefficients: k ↦ c_k
        tail_mass: 舍去部分 Σ_{k>K} c_k 的上界; 默认系数时为 2^{-K}
    """
    if K < 2:
        raise DomainError(f"series truncation K must be >= 2, got {K}")
    coeff = coefficients or (lambda k: 2.0 ** (-k))
    atoms = tuple((1.0 - 1.0 / k, float(coeff(k))) for k in range(2, K + 1))
    if tail_mass is None:
        tail_mass = 2.0 ** (-K) if coefficients is None else float("nan")
    logger.debug("truncated series at K=%d, tail mass bound %.3e", K, tail_mass)
    return MeasureSpec(atoms=atoms, truncated_mass=tail_mass, label=f"truncated_series(K={K})")


def constant_density(s0: float, S0: float, value: float = 1.0, nodes: int = DEFAULT_NODES,
                     atoms: Sequence[Tuple[float, float]] = ()) -> MeasureSpec:
    density = DensitySpec((s0, S0), (value, value), kind="constant")
    return MeasureSpec(atoms=tuple(atoms), density=density, nodes=nodes, label="constant_density")


def table_density(s_values: Sequence[float], values: Sequence[float], nodes: int = DEFAULT_NODES,
                  atoms: Sequence[Tuple[float, float]] = ()) -> MeasureSpec:
    density = DensitySpec(tuple(s_values), tuple(values), kind="table")
    return MeasureSpec(atoms=tuple(atoms), density=density, nodes=nodes, label="table_density")


def from_config(block: Dict[str, Any], path: str = "measure") -> MeasureSpec:
    """
    解析问题配置中的 measure 块

    {"atoms": [[s, w], ...],
     "density": {"kind": "constant"|"table", "support": [s0, S0], "value": v,
                 "s_values": [...], "values": [...], "nodes": n},
     "series": {"K": 20}}
    """
    if not isinstance(block, dict):
        raise ConfigError(path, "must be an object")
    unknown = set(block) - {"atoms", "density", "series"}
    if unknown:
        raise ConfigError(f"{path}.{sorted(unknown)[0]}", "unknown key")

    atoms: List[Tuple[float, float]] = []
    for i, pair in enumerate(block.get("atoms", [])):
        if not (isinstance(pair, (list, tuple)) and len(pair) == 2):
            raise ConfigError(f"{path}.atoms[{i}]", "expected [s, weight]")
        atoms.append((float(pair[0]), float(pair[1])))

    truncated = 0.0
    label = "config"
    if "series" in block:
        series = block["series"]
        extra = set(series) - {"K"}
        if extra:
            raise ConfigError(f"{path}.series.{sorted(extra)[0]}", "unknown key")
        if "K" not in series:
            raise ConfigError(f"{path}.series.K", "required")
        spec = truncated_series(int(series["K"]))
        atoms.extend(spec.atoms)
        truncated = spec.truncated_mass

    density = None
    nodes = DEFAULT_NODES
    if "density" in block:
        d = block["density"]
        allowed = {"kind", "support", "value", "s_values", "values", "nodes"}
        extra = set(d) - allowed
        if extra:
            raise ConfigError(f"{path}.density.{sorted(extra)[0]}", "unknown key")
        nodes = int(d.get("nodes", DEFAULT_NODES))
        kind = d.get("kind")
        try:
            if kind == "constant":
                if "support" not in d:
                    raise ConfigError(f"{path}.density.support", "required for constant density")
                s0, S0 = d["support"]
                value = float(d.get("value", 1.0))
                density = DensitySpec((float(s0), float(S0)), (value, value), kind="constant")
            elif kind == "table":
                density = DensitySpec(tuple(d["s_values"]), tuple(d["values"]), kind="table")
            else:
                raise ConfigError(f"{path}.density.kind", f"expected 'constant' or 'table', got {kind!r}")
        except (DomainError, KeyError, ValueError, TypeError) as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(f"{path}.density", str(e))

    try:
        return MeasureSpec(atoms=tuple(atoms), density=density, nodes=nodes,
                           truncated_mass=truncated, label=label)
    except DomainError as e:
        raise ConfigError(path, str(e))
