# io.py
"""
输出文件: CSV (pandas, 17 位有效数字, CRLF 行尾)、JSON 报告与网格函数 (CSV 或二进制转储)。

每个文件的第一行 (CSV) 或顶层字段 (JSON) 带有配置哈希。
"""

import json
import os
from datetime import datetime, timezone
from typing import Any, Dict, Iterable, List, Mapping, Optional

import numpy as np
import pandas as pd

from src.core.errors import GridMismatchError
from src.core.grid_spectral import Box, GridFunction

FLOAT_FORMAT = "%.17g"
LINE_END = "\r\n"
BINARY_MAGIC = b"NLFGRID1"


def _prepare(path: str) -> str:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    return path


def write_csv(rows: Iterable[Mapping[str, Any]], path: str, config_digest: str,
              columns: Optional[List[str]] = None) -> str:
    """
    写出 CSV 表

    Args:
        rows: 行字典
        path: 输出路径
        config_digest: 配置哈希, 写在首行注释中
        columns: 列顺序

    Returns:
        str: 输出路径
    """
    frame = pd.DataFrame(list(rows), columns=columns)
    with open(_prepare(path), "w", encoding="utf-8", newline="") as f:
        f.write(f"# config_hash={config_digest}{LINE_END}")
        frame.to_csv(f, index=False, float_format=FLOAT_FORMAT, lineterminator=LINE_END)
    return path


def read_csv(path: str) -> pd.DataFrame:
    return pd.read_csv(path, comment="#")


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, (np.floating, float)):
        v = float(value)
        return v if np.isfinite(v) else repr(v)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def write_json(data: Dict[str, Any], path: str, config_digest: str, timestamp: bool = True) -> str:
    """写出 JSON 报告; timestamp 为假时输出与时间无关"""
    payload = {"config_hash": config_digest, **_jsonable(data)}
    if timestamp:
        payload["timestamp"] = datetime.now(timezone.utc).isoformat()
    with open(_prepare(path), "w", encoding="utf-8", newline="") as f:
        f.write(json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False))
        f.write("\n")
    return path


def write_grid_function(u: GridFunction, path: str, config_digest: str) -> str:
    """网格函数写成 (index_0, ..., index_{n-1}, value) 的 CSV, 下标按字典序"""
    names = [f"index_{i}" for i in range(u.box.n)]
    index = np.indices(u.box.shape).reshape(u.box.n, -1).T
    frame = pd.DataFrame(index, columns=names)
    frame["value"] = u.values.ravel()
    return write_csv(frame.to_dict("records"), path, config_digest, names + ["value"])


def read_grid_function(path: str, box: Box) -> GridFunction:
    """
    读取 write_grid_function 的输出, 行的顺序不限

    Raises:
        GridMismatchError: 下标列缺失、越界、重复或不能覆盖整个网格
    """
    frame = read_csv(path)
    names = [f"index_{i}" for i in range(box.n)]
    missing = [c for c in names + ["value"] if c not in frame.columns]
    extra = [c for c in frame.columns if c.startswith("index_") and c not in names]
    if missing or extra:
        raise GridMismatchError(f"{path}: expected columns {names + ['value']}, got {list(frame.columns)}")
    index = frame[names].to_numpy()
    N = box.points_per_axis
    if len(frame) != N ** box.n or not np.issubdtype(index.dtype, np.integer) or np.any((index < 0) | (index >= N)):
        raise GridMismatchError(f"grid function in {path} does not match the box {box}")
    flat = np.ravel_multi_index(tuple(index.T), box.shape)
    if np.unique(flat).size != flat.size:
        raise GridMismatchError(f"grid function in {path} repeats grid indices")
    values = np.empty(flat.size)
    values[flat] = frame["value"].to_numpy(dtype=float)
    return GridFunction(box, values.reshape(box.shape))


def save_binary(u: GridFunction, path: str) -> str:
    """
    二进制转储: 8 字节魔数, uint64 维数 n 与 n 个轴长, 之后是按 C 顺序的 float64 值,
    全部为小端序
    """
    header = np.array([u.box.n, *u.box.shape], dtype="<u8")
    with open(_prepare(path), "wb") as f:
        f.write(BINARY_MAGIC)
        header.tofile(f)
        u.values.astype("<f8").tofile(f)
    return path


def load_binary(path: str, box: Box) -> GridFunction:
    """
    读取 save_binary 的输出

    Raises:
        GridMismatchError: 魔数、维数或轴长与盒子不一致, 或数据长度不符
    """
    with open(path, "rb") as f:
        raw = f.read()
    magic = len(BINARY_MAGIC)
    if raw[:magic] != BINARY_MAGIC:
        raise GridMismatchError(f"{path} is not a grid function dump")
    n = int(np.frombuffer(raw, dtype="<u8", count=1, offset=magic)[0]) if len(raw) >= magic + 8 else -1
    if n != box.n:
        raise GridMismatchError(f"{path} holds a {n}-dimensional grid, box is {box.n}-dimensional")
    body = magic + 8 * (n + 1)
    if len(raw) < body:
        raise GridMismatchError(f"{path}: truncated header")
    dims = tuple(int(d) for d in np.frombuffer(raw, dtype="<u8", count=n, offset=magic + 8))
    if dims != box.shape:
        raise GridMismatchError(f"{path} holds a grid of shape {dims}, box has {box.shape}")
    if len(raw) - body != 8 * int(np.prod(dims)):
        raise GridMismatchError(f"{path}: expected {int(np.prod(dims))} values, got {(len(raw) - body) / 8:g}")
    values = np.frombuffer(raw, dtype="<f8", offset=body).astype(float)
    return GridFunction(box, values.reshape(dims))
