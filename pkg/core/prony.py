# -*- coding: utf-8 -*-
"""
Prony 模块
核心功能：圆周样本 → 梯形/FFT Fourier 系数 → Hankel 矩阵 → 秩判定 → 零空间多项式 → 外部极点
"""
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.fft import fft, fftshift
from scipy.linalg import eigvals, hankel, matrix_balance, svd, svdvals

from utils.errors import InvalidArgumentError
from utils.helpers import as_real_array, next_power_of_two, require_even
from utils.logger import get_diagnostics_logger
from utils.models import FourierCoefficients, PronyResult

diag_logger = get_diagnostics_logger("prony")

# N_s 默认规则中的过采样因子
OVERSAMPLING = 64
# 多项式首尾零系数的相对裁剪阈值
TRIM_TOL = 1e-14
# 未知噪声时秩阈值的下限
MIN_NOISE_FLOOR = 1e-10


def coefficients_from_samples(samples) -> FourierCoefficients:
    """等距圆周样本的 FFT：Ĝ_k = fftshift(fft(samples))/N_s"""
    samples = np.asarray(samples, dtype=complex).reshape(-1)
    n_samples = require_even(samples.size, "N_s")
    values = fftshift(fft(samples)) / n_samples
    return FourierCoefficients(n_samples=n_samples, values=values)


def fourier_coeffs(sampler: Callable[[np.ndarray], np.ndarray], n_samples: int) -> FourierCoefficients:
    """
    梯形公式计算 Ĝ_k = (1/N_s) Σ_n G(θ_n) e^{-ikθ_n}

    Args:
        sampler: θ 数组 → 复数数组（向量化）
        n_samples: 偶数采样数 N_s

    Returns:
        k = -N_s/2 .. N_s/2-1 的 Fourier 系数
    """
    n_samples = require_even(n_samples, "N_s")
    theta = 2.0 * np.pi * np.arange(n_samples) / n_samples
    samples = np.asarray(sampler(theta), dtype=complex).reshape(-1)
    if samples.size != n_samples:
        raise InvalidArgumentError(f"sampler 返回 {samples.size} 个值，期望 {n_samples}")
    return coefficients_from_samples(samples)


def _hankel_block(coeffs: FourierCoefficients, rows: int, cols: int) -> np.ndarray:
    """H[i, j] = Ĝ_{i+j+1}，i < rows，j < cols"""
    last = rows + cols - 1
    if last > coeffs.k_max:
        raise InvalidArgumentError(
            f"需要 Ĝ_1..Ĝ_{last}，但 N_s={coeffs.n_samples} 只提供到 Ĝ_{coeffs.k_max}"
        )
    sequence = coeffs.span(1, last)
    return hankel(sequence[:rows], sequence[rows - 1:])


def build_hankel(coeffs: FourierCoefficients, d_max: int, l: int) -> np.ndarray:
    """l × d_max 的 Hankel 矩阵，首元素为 Ĝ_1"""
    if d_max < 1 or l < d_max:
        raise InvalidArgumentError(f"需要 1 ≤ d_max ≤ l，当前 d_max={d_max}, l={l}")
    return _hankel_block(coeffs, l, d_max)


def detect_rank(singular_values, noise_floor: float) -> int:
    """
    数值秩：最小的 d 使 s_{d+1}/s_1 < noise_floor

    无间隙时返回列表长度并记录饱和警告；s_1 = 0 时返回 0。
    """
    s = as_real_array(singular_values)
    if s.size == 0:
        raise InvalidArgumentError("奇异值列表不能为空")
    if not 0 < noise_floor < 1:
        raise InvalidArgumentError(f"noise_floor={noise_floor} 必须在 (0, 1) 内")
    if s[0] == 0:
        return 0

    below = np.flatnonzero(s[1:] / s[0] < noise_floor)
    if below.size:
        return int(below[0]) + 1
    diag_logger.warning(f"Rank saturated at d_max={s.size}: no singular-value gap below {noise_floor:.1e}")
    return int(s.size)


def estimate_noise_floor(singular_values, sigma: Optional[float]) -> Tuple[float, bool]:
    """
    秩阈值默认规则

    已知 σ 时取 max(10σ, 1e-10)；否则取 log 奇异值谱中最大间隙的几何中点。

    Returns:
        (阈值, 是否为估计值)
    """
    if sigma is not None:
        return max(10.0 * sigma, MIN_NOISE_FLOOR), False

    s = as_real_array(singular_values)
    if s.size < 2 or s[0] == 0:
        return 0.5, True
    log_s = np.log10(np.maximum(s / s[0], np.finfo(float).tiny))
    gap = int(np.argmax(log_s[:-1] - log_s[1:]))
    floor = 10.0 ** (0.5 * (log_s[gap] + log_s[gap + 1]))
    floor = float(np.clip(floor, MIN_NOISE_FLOOR, 0.5))
    diag_logger.warning(f"Noise level unknown, estimated noise floor {floor:.2e} from singular-value gap")
    return floor, True


def polynomial_roots(coeffs) -> np.ndarray:
    """
    p(t) = p_0 + p_1 t + ... + p_d t^d 的根（平衡后的伴随矩阵特征值）

    首尾小于 1e-14·‖p‖∞ 的系数被裁掉；低次端的零系数对应零根，不返回。
    """
    p = np.asarray(coeffs, dtype=complex).reshape(-1)
    scale = np.max(np.abs(p)) if p.size else 0.0
    if scale == 0:
        return np.zeros(0, dtype=complex)
    significant = np.flatnonzero(np.abs(p) > TRIM_TOL * scale)
    p = p[significant[0]:significant[-1] + 1]
    degree = p.size - 1
    if degree < 1:
        return np.zeros(0, dtype=complex)

    companion = np.zeros((degree, degree), dtype=complex)
    companion[1:, :-1] = np.eye(degree - 1)
    companion[:, -1] = -p[:-1] / p[-1]
    balanced, _ = matrix_balance(companion)
    return eigvals(balanced)


def sort_poles(poles: np.ndarray) -> np.ndarray:
    """按辐角、再按模排序"""
    poles = np.asarray(poles, dtype=complex)
    return poles[np.lexsort((np.abs(poles), np.angle(poles)))]


def prony_poles(
    coeffs: FourierCoefficients,
    d_max: int,
    l: int,
    noise_floor: float,
    tol_interior: float = 1e-3,
) -> PronyResult:
    """
    Prony 方法求单位圆外的极点

    Args:
        coeffs: Fourier 系数
        d_max: 极点数上界
        l: Hankel 行数（l ≥ d_max）
        noise_floor: 秩判定阈值
        tol_interior: |t| > 1 + tol 才视为外部极点

    Returns:
        PronyResult
    """
    # 秩饱和时第 2 步要用到 Ĝ_{d_max+l}
    if d_max + l > coeffs.k_max:
        raise InvalidArgumentError(
            f"d_max+l={d_max + l} 需要 Ĝ_1..Ĝ_{d_max + l}，N_s={coeffs.n_samples} 只提供到 Ĝ_{coeffs.k_max}；"
            f"N_s 至少为 2(d_max+l+1)={2 * (d_max + l + 1)}"
        )

    # 1. 奇异值与秩
    singular_values = svdvals(build_hankel(coeffs, d_max, l))
    rank = detect_rank(singular_values, noise_floor)
    saturated = rank == d_max and singular_values[0] > 0 and singular_values[-1] / singular_values[0] >= noise_floor
    diag_logger.debug(f"Hankel singular values: {np.array2string(singular_values, precision=3)}; rank={rank}")

    if rank == 0:
        empty = np.zeros(0, dtype=complex)
        return PronyResult(
            d_max=d_max, l=l, singular_values=singular_values, rank=0, saturated=False,
            noise_floor=noise_floor, poly_coeffs=empty, exterior_poles=empty, rejected_roots=empty,
        )

    # 2. l × (d+1) Hankel 的最小右奇异向量
    _, _, vh = svd(_hankel_block(coeffs, l, rank + 1), full_matrices=True)
    poly = vh[-1].conj()

    # 3. 多项式的根为 1/t_j
    roots = polynomial_roots(poly)
    roots = roots[roots != 0]
    candidates = 1.0 / roots
    exterior = np.abs(candidates) > 1.0 + tol_interior

    result = PronyResult(
        d_max=d_max,
        l=l,
        singular_values=singular_values,
        rank=rank,
        saturated=bool(saturated),
        noise_floor=noise_floor,
        poly_coeffs=poly,
        exterior_poles=sort_poles(candidates[exterior]),
        rejected_roots=sort_poles(candidates[~exterior]),
    )
    diag_logger.debug(
        f"Prony: {result.exterior_poles.size} exterior pole(s), {result.rejected_roots.size} rejected"
    )
    return result


def default_n_samples(d_max: int, l: int, ratio: float) -> int:
    """
    N_s 默认值：不小于 max(2(d_max+l+1), 64·ratio) 的最小 2 的幂

    分子情形 ratio = b/ε，凝聚态情形 ratio = √(b/a)。
    """
    return max(next_power_of_two(max(2 * (d_max + l + 1), OVERSAMPLING * ratio)), 2)


def trapezoid_refinement_error(sampler: Callable, n_samples: int, k_last: int) -> float:
    """N_s 与 2N_s 两种步长下 Ĝ_1..Ĝ_{k_last} 的最大差"""
    coarse = fourier_coeffs(sampler, n_samples)
    fine = fourier_coeffs(sampler, 2 * n_samples)
    return float(np.max(np.abs(coarse.span(1, k_last) - fine.span(1, k_last))))
