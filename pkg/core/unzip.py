# -*- coding: utf-8 -*-
"""
共形展开模块
核心功能：两组 z ↔ w ↔ t 展开映射的逆映射、单位圆采样与外部极点拉回

生产代码只用到逆映射（t → z）；正映射的平方根分支只出现在测试的对照解中。
"""
from typing import Callable, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from utils.errors import DomainError, InvalidArgumentError
from utils.helpers import require_even


class MoleculeMap(BaseModel):
    """区间 [-bi, bi]：w = z/(ib)，t = w + √(w²-1)"""
    model_config = ConfigDict(frozen=True)

    b: float = Field(..., gt=0.0)


class CdmMap(BaseModel):
    """区间 [ai, bi]：w = (z-qi)/(z+qi)，t = w/r + √(w²/r²-1)，q = √(ab)，r = (b-q)/(b+q)"""
    model_config = ConfigDict(frozen=True)

    a: float = Field(..., gt=0.0)
    b: float = Field(..., gt=0.0)

    @model_validator(mode="after")
    def _ordered(self) -> "CdmMap":
        if not self.a < self.b:
            raise ValueError(f"需要 0 < a < b，当前 a={self.a}, b={self.b}")
        return self

    @property
    def q(self) -> float:
        return float(np.sqrt(self.a * self.b))

    @property
    def r(self) -> float:
        q = self.q
        return (self.b - q) / (self.b + q)


UnzipMap = Union[MoleculeMap, CdmMap]


def _joukowski(t) -> np.ndarray:
    t = np.asarray(t, dtype=complex)
    if np.any(t == 0):
        raise InvalidArgumentError("t = 0 不在映射定义域内")
    return 0.5 * (t + 1.0 / t)


def _scalar_or_array(values: np.ndarray):
    return complex(values) if values.ndim == 0 else values


def mol_z_of_t(unzip_map: MoleculeMap, t):
    """逆映射 z = (ib)·w，w = (t + 1/t)/2"""
    return _scalar_or_array(1j * unzip_map.b * _joukowski(t))


def cdm_z_of_t(unzip_map: CdmMap, t):
    """逆映射 z = -qi (w+1)/(w-1)，w = (r/2)(t + 1/t)"""
    w = unzip_map.r * _joukowski(t)
    if np.any(w == 1):
        raise InvalidArgumentError("w = 1 对应 z = ∞")
    return _scalar_or_array(-1j * unzip_map.q * (w + 1.0) / (w - 1.0))


def z_of_t(unzip_map: UnzipMap, t):
    """按映射类型分派的逆映射"""
    if isinstance(unzip_map, MoleculeMap):
        return mol_z_of_t(unzip_map, t)
    return cdm_z_of_t(unzip_map, t)


def circle_angles(n_samples: int) -> np.ndarray:
    """均匀角度 θ_n = 2πn/N_s，n = 0..N_s-1"""
    n_samples = require_even(n_samples, "N_s")
    return 2.0 * np.pi * np.arange(n_samples) / n_samples


def circle_samples(sampler: Callable, unzip_map: UnzipMap, n_samples: int) -> np.ndarray:
    """在单位圆 t = e^{iθ_n} 的像点上采样插值 G̃(z(t))"""
    theta = circle_angles(n_samples)
    z = np.asarray(z_of_t(unzip_map, np.exp(1j * theta)))
    return np.asarray(sampler(z), dtype=complex)


def pullback_pole(unzip_map: UnzipMap, t_j):
    """
    外部极点拉回 ξ_j = z(t_j)

    Args:
        unzip_map: 分子或凝聚态映射
        t_j: |t_j| > 1 的极点（标量或数组）

    Returns:
        z 平面中的极点
    """
    t_array = np.asarray(t_j, dtype=complex)
    if np.any(np.abs(t_array) <= 1):
        raise DomainError("单位圆内（含圆周）的点不是物理极点")
    return z_of_t(unzip_map, t_array)
