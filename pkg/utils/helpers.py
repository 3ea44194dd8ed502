"""
工具函数模块
数组转换、参数校验与计时
"""

import math
import time
from typing import Optional

import numpy as np

from .errors import InvalidArgumentError


def as_real_array(values) -> np.ndarray:
    """转换为一维实数数组"""
    return np.atleast_1d(np.asarray(values, dtype=float))


def next_power_of_two(value: float) -> int:
    """不小于 value 的最小 2 的幂"""
    if value <= 1:
        return 1
    return 1 << math.ceil(math.log2(value))


def require_even(value: int, name: str, minimum: int = 2) -> int:
    """校验偶数参数"""
    if int(value) != value or value < minimum or value % 2:
        raise InvalidArgumentError(f"{name}={value} 必须为不小于 {minimum} 的偶数")
    return int(value)


class Timer:
    """计时器上下文管理器（单调时钟，秒）"""

    def __init__(self):
        self._start: Optional[float] = None
        self.elapsed: Optional[float] = None

    def __enter__(self):
        self._start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.elapsed = time.perf_counter() - self._start

    def get_elapsed(self) -> float:
        """获取已消耗时间"""
        if self.elapsed is not None:
            return self.elapsed
        if self._start is not None:
            return time.perf_counter() - self._start
        return 0.0
