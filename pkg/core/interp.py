# -*- coding: utf-8 -*-
"""
插值模块
核心功能：由 N 个含噪 Matsubara 样本构造虚轴区间上可任意采样的插值 G̃(z)
  - 分子情形：极点基最小二乘插值（Chebyshev 型节点 + 截断伪逆）
  - 凝聚态情形：倒数 H = 1/G 的高次样条插值；先扣除全局倒数基拟合 R(z)，
    样条只插值余量 H - R，仍逐点通过全部节点
"""
import math
from typing import Any, Callable, Optional

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field
from scipy.interpolate import make_interp_spline
from scipy.linalg import lstsq, svd

from utils.errors import (
    DegenerateSystemError,
    DomainError,
    InvalidArgumentError,
    PoleEvaluationError,
    ZeroSampleError,
)
from utils.helpers import require_even
from utils.models import MatsubaraDataset

TWO_PI = 2.0 * np.pi

# 浮点舍入允许的越界比例
DOMAIN_SLACK = 1e-12
# 分块求值的行数
EVAL_CHUNK = 1024
# N_I 默认规则：每单位 b/ε 的节点数及上限
NODES_PER_RATIO = 24
MAX_N_INTERP = 8192
# 倒数基节点：sinh 变量中的步长，节点覆盖 |x| ≤ span·b
RECIPROCAL_NODE_STEP = 0.125
RECIPROCAL_NODE_SPAN = 100.0
# 倒数基截断：σ 已知时取 max(σ, 下限)，未知时取固定值
RECIPROCAL_MIN_CUTOFF = 1e-12
RECIPROCAL_UNKNOWN_NOISE_CUTOFF = 1e-8


class PoleBasisInterpolant(BaseModel):
    """G̃(z) = (1/2π) Σ_k X_k / (z - x_k)，定义在 [-bi, bi] 上"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    nodes: np.ndarray = Field(..., description="x_k，|x_k| ≥ ε")
    weights: np.ndarray = Field(..., description="X_k")
    epsilon: float = Field(..., gt=0.0)
    b: float = Field(..., gt=0.0, description="区间半长 (2N-1)π/β")
    n_interp: int = Field(..., ge=2)
    svd_cutoff: float
    retained_rank: int = Field(..., ge=1, description="截断后保留的奇异值个数")
    residual: float = Field(..., ge=0.0, description="数据点上的 ‖C·X - g‖₂")
    reflected: bool = Field(..., description="是否使用了共轭镜像点")

    def __call__(self, z):
        return eval_pole_interpolant(self, z)


class ReciprocalBase(BaseModel):
    """R(z) = c_0 + c_1 z + Σ_j X_j / (z - x_j)，x_j = a·sinh(j·δs)"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    nodes: np.ndarray = Field(..., description="实轴节点 x_j")
    coeffs: np.ndarray = Field(..., description="[c_0, c_1, X_0, X_1, ...]")
    cutoff: float = Field(..., gt=0.0, lt=1.0)
    retained_rank: int = Field(..., ge=0)
    residual: float = Field(..., ge=0.0, description="节点上按 |G_n| 加权的均方根残差")

    def __call__(self, z):
        return eval_reciprocal_base(self, z)


class ReciprocalSplineInterpolant(BaseModel):
    """G̃(z) = 1/H̃(z)，H̃ = R + 样条(Re) + i·样条(Im)，定义在 [ai, bi] 上"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    knots: np.ndarray = Field(..., description="y_n = Im z_n")
    h_values: np.ndarray = Field(..., description="H(z_n) = 1/G(z_n)")
    order: int = Field(5, ge=1)
    a: float = Field(..., gt=0.0)
    b: float = Field(..., gt=0.0)
    base: Optional[ReciprocalBase] = Field(None, description="为 None 时样条直接插值 H")
    spline_re: Any
    spline_im: Any

    def __call__(self, z):
        return eval_reciprocal_interpolant(self, z)


def _evaluate_chunked(
    basis: Callable[[np.ndarray, np.ndarray], np.ndarray],
    z: np.ndarray,
    nodes: np.ndarray,
    coeffs: np.ndarray,
) -> np.ndarray:
    """basis(z, nodes) @ coeffs，按行分块以限制 len(z) × len(nodes) 的内存"""
    values = np.empty(z.size, dtype=complex)
    for start in range(0, z.size, EVAL_CHUNK):
        stop = start + EVAL_CHUNK
        values[start:stop] = basis(z[start:stop], nodes) @ coeffs
    return values


def chebyshev_pole_nodes(epsilon: float, n_interp: int) -> np.ndarray:
    """
    极点基节点 x_k = ε / cos(kπ/(N_I-1))，k = 0..N_I-1

    ε/x 将 (-∞,-ε]∪[ε,∞) 映到 [-1,1]，节点即该区间上的 Chebyshev 点。
    后半部分由前半部分取负得到，保证严格反对称。
    """
    if not epsilon > 0:
        raise InvalidArgumentError(f"epsilon={epsilon} 必须为正数")
    n_interp = require_even(n_interp, "N_I")

    half = n_interp // 2
    k = np.arange(half)
    first = epsilon / np.cos(k * np.pi / (n_interp - 1))
    return np.concatenate([first, -first[::-1]])


def pole_basis_matrix(z: np.ndarray, nodes: np.ndarray) -> np.ndarray:
    """C_{nk} = (1/2π) / (z_n - x_k)"""
    diff = np.asarray(z, dtype=complex)[:, np.newaxis] - np.asarray(nodes, dtype=float)[np.newaxis, :]
    if np.any(diff == 0):
        raise PoleEvaluationError("求值点与极点基节点重合")
    return 1.0 / (TWO_PI * diff)


def fit_pole_weights(
    dataset: MatsubaraDataset,
    nodes: np.ndarray,
    svd_cutoff: float = 1e-8,
    reflect: bool = True,
) -> PoleBasisInterpolant:
    """
    最小二乘求极点基权重 X = pinv(C)·g

    Args:
        dataset: Matsubara 数据集
        nodes: 极点基节点（实数，非零）
        svd_cutoff: 相对奇异值截断，s/s_max < cutoff 的分量被丢弃
        reflect: 为 True 时同时拟合 G(z̄_n) = conj(G(z_n))，使插值在 [-bi, 0] 上同样受控

    Returns:
        PoleBasisInterpolant
    """
    nodes = np.asarray(nodes, dtype=float).reshape(-1)
    if nodes.size == 0 or np.any(nodes == 0):
        raise InvalidArgumentError("极点基节点必须非空且非零")
    if not 0 < svd_cutoff < 1:
        raise InvalidArgumentError(f"svd_cutoff={svd_cutoff} 必须在 (0, 1) 内")

    z = dataset.points
    g = dataset.samples
    if reflect:
        z_fit = np.concatenate([z, np.conj(z)])
        g_fit = np.concatenate([g, np.conj(g)])
    else:
        z_fit, g_fit = z, g

    matrix = pole_basis_matrix(z_fit, nodes)
    u, s, vh = svd(matrix, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        raise DegenerateSystemError("极点基矩阵为零矩阵")
    keep = s >= svd_cutoff * s[0]
    if not np.any(keep):
        raise DegenerateSystemError("所有奇异值均低于截断阈值")

    coeffs = (u[:, keep].conj().T @ g_fit) / s[keep]
    weights = vh[keep].conj().T @ coeffs

    residual = float(np.linalg.norm(matrix[:z.size] @ weights - g))
    logger.debug(
        f"Pole-basis fit: N_I={nodes.size}, rank={int(keep.sum())}/{s.size}, residual={residual:.3e}"
    )
    return PoleBasisInterpolant(
        nodes=nodes,
        weights=weights,
        epsilon=float(np.min(np.abs(nodes))),
        b=dataset.b,
        n_interp=nodes.size,
        svd_cutoff=svd_cutoff,
        retained_rank=int(keep.sum()),
        residual=residual,
        reflected=reflect,
    )


def eval_pole_interpolant(interp: PoleBasisInterpolant, z):
    """
    求值 G̃(z)

    区间 [-bi, bi] 之外会给出警告；|z| > 2b 时拒绝外推。
    """
    z_array = np.asarray(z, dtype=complex)
    flat = z_array.reshape(-1)

    limit = interp.b * (1 + DOMAIN_SLACK)
    off_segment = (np.abs(flat.imag) > limit) | (np.abs(flat.real) > DOMAIN_SLACK * interp.b)
    if np.any(np.abs(flat) > 2 * interp.b):
        raise DomainError(f"求值点超出 2b={2 * interp.b:.6g}，拒绝外推")
    if np.any(off_segment):
        logger.warning(f"{int(off_segment.sum())} evaluation point(s) outside [-bi, bi]")

    values = _evaluate_chunked(pole_basis_matrix, flat, interp.nodes, interp.weights)
    values = values.reshape(z_array.shape)
    return complex(values) if values.ndim == 0 else values


def reciprocal_base_nodes(
    a: float,
    b: float,
    step: float = RECIPROCAL_NODE_STEP,
    span: float = RECIPROCAL_NODE_SPAN,
) -> np.ndarray:
    """
    倒数基节点 x_j = a·sinh(j·step)，|x_j| ≤ span·b

    对 z = iy（y ≥ a），核 1/(z - x) 作为 s = asinh(x/a) 的函数在 |Im s| < π/2 内解析，
    故 s 上等距的节点对整个 [ai, bi] 一致有效；更远处的贡献由 c_0 + c_1 z 吸收。
    """
    if not 0 < a < b:
        raise InvalidArgumentError(f"需要 0 < a < b，当前 a={a}, b={b}")
    j_max = int(np.ceil(np.arcsinh(span * b / a) / step))
    return a * np.sinh(step * np.arange(-j_max, j_max + 1))


def reciprocal_basis_matrix(z: np.ndarray, nodes: np.ndarray) -> np.ndarray:
    """列依次为 1、z、1/(z - x_j)"""
    z = np.asarray(z, dtype=complex).reshape(-1)
    diff = z[:, np.newaxis] - np.asarray(nodes, dtype=float)[np.newaxis, :]
    if np.any(diff == 0):
        raise PoleEvaluationError("求值点与倒数基节点重合")
    return np.hstack([np.ones((z.size, 1)), z[:, np.newaxis], 1.0 / diff])


def default_base_cutoff(noise_sigma: Optional[float]) -> float:
    """倒数基的相对截断：σ 已知时 max(σ, 1e-12)，未知时 1e-8"""
    if noise_sigma is None:
        return RECIPROCAL_UNKNOWN_NOISE_CUTOFF
    return max(float(noise_sigma), RECIPROCAL_MIN_CUTOFF)


def fit_reciprocal_base(points, h_values, a: float, b: float, cutoff: float) -> ReciprocalBase:
    """
    两步加权最小二乘拟合 H ≈ R

    先拟合线性部分 c_0 + c_1 z，再对余量做节点部分的截断 SVD（列先归一化）。
    行权重 1/|H_n| = |G_n|，各行残差因此按 G 的相对误差计。

    Args:
        points: 节点 z_n = i·y_n
        h_values: H(z_n)
        a, b: 区间端点
        cutoff: 节点部分的相对奇异值截断

    Returns:
        ReciprocalBase
    """
    if not 0 < cutoff < 1:
        raise InvalidArgumentError(f"cutoff={cutoff} 必须在 (0, 1) 内")
    z = np.asarray(points, dtype=complex).reshape(-1)
    h_values = np.asarray(h_values, dtype=complex).reshape(-1)

    nodes = reciprocal_base_nodes(a, b)
    row_weight = 1.0 / np.abs(h_values)
    weighted = reciprocal_basis_matrix(z, nodes) * row_weight[:, np.newaxis]
    target = h_values * row_weight

    linear, *_ = lstsq(weighted[:, :2], target)
    remainder = target - weighted[:, :2] @ linear

    columns = weighted[:, 2:]
    scale = np.linalg.norm(columns, axis=0)
    if np.linalg.norm(remainder) <= cutoff * np.linalg.norm(target):
        # 线性部分已在截断精度内解释数据，节点部分只会拟合舍入误差
        keep = np.zeros(nodes.size, dtype=bool)
        pole_coeffs = np.zeros(nodes.size, dtype=complex)
    else:
        u, s, vh = svd(columns / scale, full_matrices=False)
        keep = s >= cutoff * s[0]
        pole_coeffs = vh[keep].conj().T @ ((u[:, keep].conj().T @ remainder) / s[keep])

    coeffs = np.concatenate([linear, pole_coeffs / scale])
    residual = float(np.linalg.norm(weighted @ coeffs - target) / np.sqrt(z.size))
    logger.debug(
        f"Reciprocal base fit: {nodes.size} nodes, rank={int(keep.sum())}/{keep.size}, "
        f"cutoff={cutoff:.1e}, weighted residual={residual:.3e}"
    )
    return ReciprocalBase(
        nodes=nodes,
        coeffs=coeffs,
        cutoff=cutoff,
        retained_rank=int(keep.sum()),
        residual=residual,
    )


def eval_reciprocal_base(base: ReciprocalBase, z):
    """R(z)"""
    z_array = np.asarray(z, dtype=complex)
    values = _evaluate_chunked(reciprocal_basis_matrix, z_array.reshape(-1), base.nodes, base.coeffs)
    values = values.reshape(z_array.shape)
    return complex(values) if values.ndim == 0 else values


def _spline_knots(y: np.ndarray, order: int) -> Optional[np.ndarray]:
    """
    偶数次样条的节点向量：内部节点取数据中点并去掉两端各 order/2 个

    奇数次返回 None，交给 make_interp_spline 的 not-a-knot 默认。
    """
    if order % 2:
        return None
    inner = 0.5 * (y[1:] + y[:-1])
    inner = inner[order // 2: inner.size - order // 2]
    return np.concatenate([np.full(order + 1, y[0]), inner, np.full(order + 1, y[-1])])


def fit_reciprocal_spline(
    dataset: MatsubaraDataset,
    order: int = 5,
    deflate: bool = True,
    base_cutoff: Optional[float] = None,
) -> ReciprocalSplineInterpolant:
    """
    倒数样条插值：H(z_n) = 1/G(z_n)，Re、Im 分别对 y = Im z 做插值样条

    Args:
        dataset: Matsubara 数据集
        order: 样条次数（≥ 1；奇数用 not-a-knot 端点条件，偶数用中点节点）
        deflate: 为 True 时先扣除全局倒数基 R，样条插值 H - R；False 时直接插值 H
        base_cutoff: 倒数基截断（默认按数据集的 σ 取 max(σ, 1e-12)）

    Returns:
        ReciprocalSplineInterpolant
    """
    if int(order) != order or order < 1:
        raise InvalidArgumentError(f"spline order={order} 必须为正整数")
    order = int(order)
    if dataset.n_points < order + 1:
        raise InvalidArgumentError(f"样条次数 {order} 至少需要 {order + 1} 个点，当前 N={dataset.n_points}")

    zero = np.flatnonzero(dataset.samples == 0)
    if zero.size:
        raise ZeroSampleError(f"reciprocal step: zero sample at n={int(zero[0]) + 1}")

    knots = dataset.points.imag.copy()
    h_values = 1.0 / dataset.samples

    base = None
    remainder = h_values
    if deflate:
        cutoff = base_cutoff if base_cutoff is not None else default_base_cutoff(dataset.noise_sigma)
        base = fit_reciprocal_base(dataset.points, h_values, dataset.a, dataset.b, cutoff)
        remainder = h_values - eval_reciprocal_base(base, dataset.points)

    spline_knots = _spline_knots(knots, order)
    spline_re = make_interp_spline(knots, remainder.real, k=order, t=spline_knots)
    spline_im = make_interp_spline(knots, remainder.imag, k=order, t=spline_knots)

    logger.debug(f"Reciprocal spline fit: N={dataset.n_points}, order={order}, deflated={deflate}")
    return ReciprocalSplineInterpolant(
        knots=knots,
        h_values=h_values,
        order=order,
        a=dataset.a,
        b=dataset.b,
        base=base,
        spline_re=spline_re,
        spline_im=spline_im,
    )


def eval_reciprocal_interpolant(interp: ReciprocalSplineInterpolant, z):
    """求值 G̃(z) = 1/H̃(z)，仅允许 z ∈ [ai, bi]（不外推）"""
    z_array = np.asarray(z, dtype=complex)
    flat = z_array.reshape(-1)

    slack = DOMAIN_SLACK * interp.b
    y = flat.imag
    outside = (np.abs(flat.real) > slack) | (y < interp.a - slack) | (y > interp.b + slack)
    if np.any(outside):
        raise DomainError(f"倒数样条只在 [{interp.a:.6g}i, {interp.b:.6g}i] 上有定义")
    y = np.clip(y, interp.a, interp.b)

    h_tilde = interp.spline_re(y) + 1j * interp.spline_im(y)
    if interp.base is not None:
        h_tilde = h_tilde + eval_reciprocal_base(interp.base, 1j * y)
    if np.any(h_tilde == 0):
        raise PoleEvaluationError("H̃(z) = 0，G̃ 在此处无定义")
    values = (1.0 / h_tilde).reshape(z_array.shape)
    return complex(values) if values.ndim == 0 else values


def default_n_interp(n_points: int, ratio: Optional[float] = None, cap: int = MAX_N_INTERP) -> int:
    """
    N_I 默认值：max(N, 24·b/ε)，不超过 cap，向上取偶

    节点在 |x| 大处按 ε/cos 稀疏分布，极点基对 [ε, b] 上实极点的逼近误差约为 exp(-N_I·ε/b)，
    故 N_I 须随 b/ε 线性增长。ratio 为 None 时只用 N。
    """
    n_interp = n_points
    if ratio is not None:
        n_interp = max(n_interp, math.ceil(NODES_PER_RATIO * ratio))
    if n_interp > cap:
        logger.warning(f"N_I={n_interp} exceeds cap {cap}; pole-basis accuracy may suffer")
        n_interp = cap
    return max(2, n_interp + n_interp % 2)


def interpolation_error(interp, truth, z_dense: np.ndarray) -> float:
    """稠密采样点上的最大相对误差 max|G̃ - G| / max|G|"""
    approx = np.asarray(interp(z_dense))
    exact = np.asarray(truth(z_dense))
    return float(np.max(np.abs(approx - exact)) / np.max(np.abs(exact)))


def dense_segment(lower: float, upper: float, count: int = 10_000) -> np.ndarray:
    """虚轴区间 [lower·i, upper·i] 上的均匀采样点"""
    return 1j * np.linspace(lower, upper, count)
