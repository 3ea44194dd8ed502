# -*- coding: utf-8 -*-
"""
权重恢复模块
核心功能：给定极点，由 Matsubara 样本拟合权重，并在实轴附近求谱函数
  - 分子情形：非负最小二乘 + 伪极点剪枝
  - 凝聚态情形：复权重 + 谱正性约束的最小二乘
"""
from typing import List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, model_validator

from core.solvers import constrained_lsq, nnls
from utils.config import PipelineConfig
from utils.errors import InvalidArgumentError
from utils.models import MatsubaraDataset, Reconstruction, ReconstructionDiagnostics

TWO_PI = 2.0 * np.pi

# 默认约束网格：两端各留 5Γ，步长 Γ/10，至多 4001 点
GRID_MARGIN = 5.0
GRID_STEPS_PER_WIDTH = 10.0
GRID_MAX_COUNT = 4001
# 实轴投影后视为重合的相对距离
MERGE_TOL = 1e-10


class ConstraintGrid(BaseModel):
    """正性约束的实轴网格 x_m，均匀分布"""
    model_config = ConfigDict(frozen=True)

    x_min: float
    x_max: float
    count: int = Field(..., ge=2)

    @model_validator(mode="after")
    def _ordered(self) -> "ConstraintGrid":
        if not self.x_max > self.x_min:
            raise ValueError(f"约束网格需要 x_max > x_min，当前 [{self.x_min}, {self.x_max}]")
        return self

    def points(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.count)


def default_constraint_grid(poles) -> ConstraintGrid:
    """
    默认约束网格

    x ∈ [min Re ξ - 5Γ, max Re ξ + 5Γ]，Γ = max |Im ξ|，步长 Γ/10，点数上限 4001。
    """
    poles = np.asarray(poles, dtype=complex).reshape(-1)
    if poles.size == 0:
        raise InvalidArgumentError("极点列表为空，无法构造约束网格")
    width = float(np.max(np.abs(poles.imag)))
    if width == 0:
        raise InvalidArgumentError("极点均在实轴上，无法确定约束网格步长")

    x_min = float(np.min(poles.real)) - GRID_MARGIN * width
    x_max = float(np.max(poles.real)) + GRID_MARGIN * width
    count = int(np.floor((x_max - x_min) * GRID_STEPS_PER_WIDTH / width)) + 1
    return ConstraintGrid(x_min=x_min, x_max=x_max, count=int(np.clip(count, 2, GRID_MAX_COUNT)))


def constraint_grid_from_config(config: PipelineConfig, poles) -> ConstraintGrid:
    """配置中未给出的网格参数按默认规则补齐"""
    grid = default_constraint_grid(poles)
    return ConstraintGrid(
        x_min=grid.x_min if config.grid_x_min is None else config.grid_x_min,
        x_max=grid.x_max if config.grid_x_max is None else config.grid_x_max,
        count=grid.count if config.grid_count is None else config.grid_count,
    )


def _design_matrix(z: np.ndarray, poles: np.ndarray) -> np.ndarray:
    """C_{ij} = (1/2π) / (z_i - ξ_j)"""
    return 1.0 / (TWO_PI * (z[:, np.newaxis] - poles[np.newaxis, :]))


def _misfit(dataset: MatsubaraDataset, poles: np.ndarray, weights: np.ndarray) -> float:
    if poles.size == 0:
        return float(np.sum(np.abs(dataset.samples) ** 2))
    residual = _design_matrix(dataset.points, poles) @ weights - dataset.samples
    return float(np.sum(np.abs(residual) ** 2))


def project_to_real_axis(poles) -> Tuple[np.ndarray, List[float], List[float]]:
    """
    分子情形的实轴投影：ξ_j → Re ξ_j

    投影后重合（相对距离 ≤ 1e-10）的极点只保留一个，落在原点的极点被丢弃。

    Returns:
        (实极点, 丢弃的虚部, 被合并或丢弃的实极点)
    """
    poles = np.asarray(poles, dtype=complex).reshape(-1)
    discarded_imag = [float(v) for v in poles.imag]
    real = np.sort(poles.real)
    scale = max(float(np.max(np.abs(real))), 1.0) if real.size else 1.0

    kept: List[float] = []
    dropped: List[float] = []
    for value in real:
        if value == 0 or (kept and abs(value - kept[-1]) <= MERGE_TOL * scale):
            dropped.append(float(value))
        else:
            kept.append(float(value))
    if dropped:
        logger.warning(f"Real-axis projection dropped {len(dropped)} pole(s): {dropped}")
    return np.asarray(kept, dtype=float), discarded_imag, dropped


def _solve_nonnegative(dataset: MatsubaraDataset, poles: np.ndarray, max_iter: int):
    """实部虚部堆叠后的 NNLS"""
    design = _design_matrix(dataset.points, poles.astype(complex))
    matrix = np.vstack([design.real, design.imag])
    rhs = np.concatenate([dataset.samples.real, dataset.samples.imag])
    return nnls(matrix, rhs, max_iter=max_iter)


def fit_molecule_weights(
    dataset: MatsubaraDataset,
    poles: Sequence[float],
    prune_ratio: float = 1e-8,
    max_iter: int = 100_000,
) -> Reconstruction:
    """
    分子情形权重：min_{A ≥ 0} Σ_i |G(z_i) - (1/2π) Σ_j A_j/(z_i - ξ_j)|²

    Args:
        dataset: Matsubara 数据集
        poles: 实数、互异、非零的极点
        prune_ratio: A_j < prune_ratio·max A 的原子被剪枝后重新拟合一次（0 表示不剪枝）
        max_iter: NNLS 迭代上限

    Returns:
        Reconstruction（kind="molecule"）
    """
    poles = np.asarray(poles)
    if poles.size == 0:
        raise InvalidArgumentError("极点列表不能为空")
    if np.iscomplexobj(poles) and np.any(poles.imag != 0):
        raise InvalidArgumentError("分子情形的极点必须为实数")
    poles = np.asarray(poles.real, dtype=float).reshape(-1)
    if np.any(poles == 0):
        raise InvalidArgumentError("极点不能为零")
    if np.unique(poles).size != poles.size:
        raise InvalidArgumentError("极点必须互异")

    # 1. 全部极点上的 NNLS
    result = _solve_nonnegative(dataset, poles, max_iter)
    weights = result.x
    iterations = result.iterations

    # 2. 剪枝近零原子后重拟合一次
    pruned: List[complex] = []
    if prune_ratio > 0 and np.max(weights) > 0:
        keep = weights >= prune_ratio * np.max(weights)
        if not np.all(keep):
            pruned = [complex(p) for p in poles[~keep]]
            poles = poles[keep]
            result = _solve_nonnegative(dataset, poles, max_iter)
            weights = result.x
            iterations += result.iterations
            logger.info(f"Pruned {len(pruned)} spurious atom(s), refit on {poles.size} pole(s)")

    recon = Reconstruction(
        kind="molecule",
        poles=poles.astype(complex),
        weights=weights.astype(complex),
        residual=result.objective,
        diagnostics=ReconstructionDiagnostics(
            discarded_poles=pruned,
            kkt_residual=result.kkt_residual,
            solver_iterations=iterations,
        ),
    )
    logger.debug(f"Molecule weights: {np.array2string(weights, precision=6)}; residual={result.objective:.3e}")
    return recon


def positivity_matrix(grid_points: np.ndarray, poles: np.ndarray) -> np.ndarray:
    """
    Im(Σ_j A_j/(x_m - ξ_j)) 关于 v = [Re A; Im A] 的线性系数

    A = a + ib，D = 1/(x - ξ)：Im(A·D) = Im D·a + Re D·b
    """
    inverse = 1.0 / (grid_points[:, np.newaxis] - poles[np.newaxis, :])
    return np.hstack([inverse.imag, inverse.real])


def fit_cdm_weights(
    dataset: MatsubaraDataset,
    poles: Sequence[complex],
    grid: Optional[ConstraintGrid] = None,
    feas_tol: float = 1e-8,
    stat_tol: float = 1e-8,
    max_iter: int = 100_000,
    eta: Optional[float] = None,
) -> Reconstruction:
    """
    凝聚态情形权重：复权重最小二乘，约束 Im(Σ_j A_j/(x_m - ξ_j)) ≤ 0 对所有网格点成立

    Args:
        dataset: Matsubara 数据集
        poles: 开下半平面中的极点
        grid: 约束网格（默认按极点构造）
        feas_tol: 约束可行性容差
        stat_tol: 相对平稳性容差
        max_iter: 求解器迭代上限
        eta: 写入结果的展宽参数

    Returns:
        Reconstruction（kind="condensed"）
    """
    poles = np.asarray(poles, dtype=complex).reshape(-1)
    if poles.size == 0:
        raise InvalidArgumentError("极点列表不能为空")
    if np.any(poles.imag >= 0):
        raise InvalidArgumentError("凝聚态极点必须位于开下半平面")
    if grid is None:
        grid = default_constraint_grid(poles)

    # 1. 复数最小二乘写成实数形式：M = [[Re C, -Im C], [Im C, Re C]]
    design = _design_matrix(dataset.points, poles)
    matrix = np.block([[design.real, -design.imag], [design.imag, design.real]])
    rhs = np.concatenate([dataset.samples.real, dataset.samples.imag])

    # 2. 约束网格上的正性条件
    constraints = positivity_matrix(grid.points(), poles)
    result = constrained_lsq(
        matrix, rhs, constraints, feas_tol=feas_tol, stat_tol=stat_tol, max_iter=max_iter,
    )

    m = poles.size
    weights = result.x[:m] + 1j * result.x[m:]
    logger.debug(
        f"Condensed weights on {m} pole(s), grid={grid.count} pts, "
        f"residual={result.objective:.3e}, max violation={result.max_violation:.2e}"
    )
    return Reconstruction(
        kind="condensed",
        poles=poles,
        weights=weights,
        residual=result.objective,
        eta=eta,
        diagnostics=ReconstructionDiagnostics(
            kkt_residual=result.kkt_residual,
            max_violation=result.max_violation,
            solver_iterations=result.iterations,
        ),
    )


def filter_lower_half(poles, cutoff: float = 1e-6) -> Tuple[np.ndarray, List[complex]]:
    """丢弃 Im ξ ≥ -cutoff 的极点"""
    poles = np.asarray(poles, dtype=complex).reshape(-1)
    keep = poles.imag < -cutoff
    discarded = [complex(p) for p in poles[~keep]]
    if discarded:
        logger.warning(f"Discarded {len(discarded)} pole(s) outside the lower half-plane: {discarded}")
    return poles[keep], discarded


def empty_reconstruction(dataset: MatsubaraDataset, kind: str, eta: Optional[float] = None) -> Reconstruction:
    """无极点时的重建结果（残差为 ‖g‖²）"""
    empty = np.zeros(0, dtype=complex)
    return Reconstruction(kind=kind, poles=empty, weights=empty, residual=_misfit(dataset, empty, empty), eta=eta)


def eval_spectral(recon: Reconstruction, x, eta: Optional[float] = None):
    """
    谱函数 A(x) = -2 Im (1/2π) Σ_j A_j / (x + iη - ξ_j)

    Args:
        recon: 重建结果
        x: 实数标量或数组
        eta: 展宽 η > 0（默认取结果中记录的 η，再缺省为 0.01）

    Returns:
        与 x 同形状的实数值
    """
    if eta is None:
        eta = recon.eta if recon.eta is not None else 0.01
    if not eta > 0:
        raise InvalidArgumentError(f"eta={eta} 必须为正数")

    x_array = np.asarray(x, dtype=float)
    if recon.n_poles == 0:
        values = np.zeros(x_array.shape)
    else:
        z = x_array[..., np.newaxis] + 1j * eta
        values = -2.0 * np.imag((recon.weights / (z - recon.poles)).sum(axis=-1) / TWO_PI)
    return float(values) if values.ndim == 0 else values
