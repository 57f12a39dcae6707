# errors.py
"""异常层次: 所有数值模块抛出的错误都继承自 NonlocalError。"""

from typing import Any, Optional


class NonlocalError(Exception):
    """库内所有错误的基类"""


class DomainError(NonlocalError, ValueError):
    """参数超出数学定义域 (如 Γ(x≤0), s 越界, 不支持的维数)"""


class PreconditionError(NonlocalError, ValueError):
    """操作的前置条件不满足"""


class GridMismatchError(NonlocalError, ValueError):
    """两个网格对象不在同一个计算盒子上"""


class RealityLossError(NonlocalError, ArithmeticError):
    """乘子作用后虚部残差超过阈值, 通常说明符号不满足共轭对称"""

    def __init__(self, residue: float, threshold: float):
        self.residue = residue
        self.threshold = threshold
        super().__init__(
            f"imaginary residue {residue:.3e} exceeds {threshold:.1e}; "
            "multiplier is not conjugate-symmetric"
        )


class ResolutionError(NonlocalError, ValueError):
    """缩放后的函数支撑小于 8 个网格单元"""


class SizeCapError(NonlocalError, ValueError):
    """Galerkin 基函数数量超过上限"""


class EigenSolverError(NonlocalError, RuntimeError):
    """广义特征值求解失败"""


class HypothesisViolation(NonlocalError):
    """系数假设检查失败, 携带假设名称和反例"""

    def __init__(self, hypothesis: str, message: str, witness: Optional[Any] = None):
        self.hypothesis = hypothesis
        self.witness = witness
        text = f"[{hypothesis}] {message}"
        if witness is not None:
            text += f" (witness: {witness})"
        super().__init__(text)


class ConfigError(NonlocalError, ValueError):
    """问题配置格式错误, 携带字段路径"""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")
