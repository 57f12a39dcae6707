# problem.py
"""
JSON 问题配置: 解析、校验 (拒绝未知键) 与各模块对象的构造。

示例见 configs/ 目录。规范化后的配置 (含所有默认值) 写入每个输出,
其 sha256 即输出中的 config_hash。
"""

import copy
import json
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np
import scipy.linalg

from src.core import coefficients as coefficients_mod
from src.core import measure_mu
from src.core.errors import ConfigError, DomainError
from src.core.fredholm_solver import RANK_TOLERANCE, AssembledSystem
from src.core.grid_spectral import Box, Domain
from src.core.profiles import canonical_family
from src.core.variational import FormContext
from src.utils.io import read_grid_function
from src.utils.utils import config_hash

logger = logging.getLogger(__name__)

DEFAULTS: Dict[str, Any] = {
    "box": {"n": 1, "L": 8.0, "N": 256},
    "omega": {"shape": "interval", "radius": 1.0, "center": []},
    "measure": {"atoms": [[1.0, 1.0]]},
    "coefficients": {"preset": "identity"},
    "rhs": {"kind": "bump", "index": 0},
    "sigma": "auto",
    "tolerances": {"rank": RANK_TOLERANCE},
    "hypotheses": {"delta": 1.0, "R": 2.0, "C": 1.0, "p": 0.5, "relax_at_one": False},
    "seed": 7,
}

_SECTION_KEYS = {
    "box": {"n", "L", "N"},
    "omega": {"shape", "radius", "center"},
    "rhs": {"kind", "index", "path"},
    "tolerances": {"rank"},
    "hypotheses": {"delta", "R", "C", "p", "relax_at_one"},
}

RHS_KINDS = ("bump", "seeded", "zero", "csv", "compatible")


def _merge(section: str, given: Any) -> Any:
    default = DEFAULTS[section]
    if not isinstance(default, dict):
        return given
    if not isinstance(given, dict):
        raise ConfigError(section, "must be an object")
    allowed = _SECTION_KEYS.get(section)
    if allowed is not None:
        extra = set(given) - allowed
        if extra:
            raise ConfigError(f"{section}.{sorted(extra)[0]}", "unknown key")
    if section in ("measure", "coefficients"):
        return copy.deepcopy(given)
    merged = copy.deepcopy(default)
    merged.update(given)
    return merged


@dataclass
class ProblemConfig:
    """规范化后的问题配置"""

    data: Dict[str, Any] = field(default_factory=lambda: copy.deepcopy(DEFAULTS))

    @classmethod
    def from_dict(cls, raw: Dict[str, Any]) -> "ProblemConfig":
        """
        校验并补全默认值

        Raises:
            ConfigError: 未知键或字段类型错误, 附带字段路径
        """
        if not isinstance(raw, dict):
            raise ConfigError("<root>", "config must be a JSON object")
        extra = set(raw) - set(DEFAULTS)
        if extra:
            raise ConfigError(sorted(extra)[0], "unknown key")
        data = copy.deepcopy(DEFAULTS)
        for key, value in raw.items():
            data[key] = _merge(key, value)
        cfg = cls(data)
        cfg._validate()
        return cfg

    def _validate(self) -> None:
        box = self.data["box"]
        try:
            _ = self.box
        except (DomainError, TypeError, ValueError) as e:
            raise ConfigError("box", str(e))
        try:
            self.omega.check_embedding(self.box, margin_factor=3.0)
        except (DomainError, TypeError, ValueError) as e:
            raise ConfigError("omega", str(e))
        _ = (self.measure, self.coefficients)
        rhs = self.data["rhs"]
        if rhs.get("kind") not in RHS_KINDS:
            raise ConfigError("rhs.kind", f"expected one of {RHS_KINDS}, got {rhs.get('kind')!r}")
        if rhs["kind"] == "csv" and "path" not in rhs:
            raise ConfigError("rhs.path", "required for csv right-hand side")
        sigma = self.data["sigma"]
        if isinstance(sigma, dict):
            if set(sigma) != {"sweep"} or len(sigma["sweep"]) != 3:
                raise ConfigError("sigma", "expected a number, \"auto\" or {\"sweep\": [lo, hi, count]}")
        elif not (sigma == "auto" or isinstance(sigma, (int, float))):
            raise ConfigError("sigma", f"expected a number, \"auto\" or a sweep, got {sigma!r}")
        if not isinstance(self.data["seed"], int):
            raise ConfigError("seed", "must be an integer")
        logger.debug("problem config validated: n=%d, N=%d", box["n"], box["N"])

    # -- constructors ---------------------------------------------------------------

    @property
    def n(self) -> int:
        return int(self.data["box"]["n"])

    @property
    def seed(self) -> int:
        return int(self.data["seed"])

    @property
    def box(self) -> Box:
        b = self.data["box"]
        return Box(int(b["n"]), float(b["L"]), int(b["N"]))

    @property
    def omega(self) -> Domain:
        o = self.data["omega"]
        return Domain(o["shape"], float(o["radius"]), tuple(o.get("center") or ()))

    @property
    def measure(self) -> measure_mu.MeasureSpec:
        return measure_mu.from_config(self.data["measure"])

    @property
    def coefficients(self) -> coefficients_mod.CoefficientSet:
        return coefficients_mod.from_config(self.data["coefficients"], self.n)

    @property
    def hypotheses(self) -> Dict[str, Any]:
        return dict(self.data["hypotheses"])

    @property
    def rank_tolerance(self) -> float:
        return float(self.data["tolerances"]["rank"])

    def context(self) -> FormContext:
        return FormContext(self.measure, self.coefficients, self.omega, self.box)

    def sigmas(self, sigma0: float) -> List[float]:
        sigma = self.data["sigma"]
        if sigma == "auto":
            return [sigma0 + 1.0]
        if isinstance(sigma, dict):
            lo, hi, count = sigma["sweep"]
            return [float(x) for x in np.linspace(float(lo), float(hi), int(count))]
        return [float(sigma)]

    def rhs(self, system: AssembledSystem, sigma: Optional[float] = None) -> np.ndarray:
        """右端泛函向量"""
        spec = self.data["rhs"]
        kind = spec["kind"]
        ctx = system.ctx
        if kind == "zero":
            return np.zeros(system.size)
        if kind == "bump":
            family = canonical_family(self.n, ctx.omega)
            index = int(spec.get("index", 0))
            if not 0 <= index < len(family):
                raise ConfigError("rhs.index", f"must lie in [0, {len(family) - 1}]")
            return system.functional(family[index].sample(ctx.box))
        if kind == "csv":
            return system.functional(read_grid_function(spec["path"], ctx.box))
        rng = np.random.default_rng(self.seed)
        T = rng.normal(size=system.size)
        if kind == "compatible" and sigma is not None:
            U, S, _ = scipy.linalg.svd(system.shifted(sigma))
            adjoint = U[:, S <= system.tolerance]
            T = T - adjoint @ (adjoint.T @ T)
        return T

    def to_dict(self) -> Dict[str, Any]:
        return copy.deepcopy(self.data)

    @property
    def digest(self) -> str:
        return config_hash(self.data)


def load_problem(path: str) -> ProblemConfig:
    """
    读取 JSON 配置文件

    Raises:
        ConfigError: 文件不存在、JSON 语法错误 (附行号) 或字段错误
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = json.load(f)
    except FileNotFoundError:
        raise ConfigError("<file>", f"config file not found: {path}")
    except json.JSONDecodeError as e:
        raise ConfigError(f"line {e.lineno}, column {e.colno}", e.msg)
    return ProblemConfig.from_dict(raw)
