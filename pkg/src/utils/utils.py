# utils.py
import hashlib
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Iterable, List, Optional, TypeVar

from src.core.config import config

T = TypeVar("T")
R = TypeVar("R")

_LOGGING_CONFIGURED = False


def setup_logging(level: Optional[str] = None) -> None:
    """根据 LOG_LEVEL 配置根日志器, 只生效一次"""
    global _LOGGING_CONFIGURED
    if _LOGGING_CONFIGURED:
        return
    level_name = (level or config.log_level).upper()
    logging.basicConfig(
        level=getattr(logging, level_name, logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    _LOGGING_CONFIGURED = True


def thread_cap(threads: Optional[int] = None) -> int:
    """返回并行线程上限; 未指定时读取 NONLOCAL_FREDHOLM_THREADS"""
    if threads is None:
        return config.threads
    if threads < 1:
        raise ValueError(f"threads must be positive, got {threads}")
    return threads


def parallel_map(fn: Callable[[T], R], items: Iterable[T], threads: Optional[int] = None) -> List[R]:
    """
    在线程池上执行 fn, 结果按输入顺序返回

    Args:
        fn: 对单个元素的计算
        items: 输入序列
        threads: 线程上限, 默认读取环境变量

    Returns:
        List: 与输入同序的结果
    """
    items = list(items)
    workers = min(thread_cap(threads), max(len(items), 1))
    if workers == 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def canonical_json(data: Any) -> str:
    """键排序、无多余空白的 JSON 文本, 用于计算配置哈希"""
    return json.dumps(data, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def config_hash(data: Any) -> str:
    return hashlib.sha256(canonical_json(data).encode("utf-8")).hexdigest()
