# -*- coding: utf-8 -*-
"""
求解器模块
核心功能：权重拟合所需的两个凸优化求解器
  - nnls：非负最小二乘（Lawson-Hanson 有效集法）
  - constrained_lsq：线性不等式约束最小二乘（Goldfarb-Idnani 对偶有效集法）
"""
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.linalg import lstsq, qr, solve, solve_triangular

from utils.errors import InvalidArgumentError, SolverError
from utils.logger import get_diagnostics_logger

diag_logger = get_diagnostics_logger("solvers")

EPS = np.finfo(float).eps


class SolverResult(BaseModel):
    """求解结果与收敛诊断"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    x: np.ndarray
    objective: float = Field(..., description="‖Ax - b‖²")
    iterations: int
    kkt_residual: float = Field(0.0, description="KKT 条件残差")
    max_violation: float = Field(0.0, description="最大约束违反量")
    active_set: List[int] = Field(default_factory=list)


def nnls_kkt_residual(matrix: np.ndarray, rhs: np.ndarray, x: np.ndarray) -> float:
    """
    NNLS 的 KKT 残差

    梯度 g = Aᵀ(Ax - b)：自由变量要求 |g| = 0，取零的变量要求 g ≥ 0。
    """
    gradient = matrix.T @ (matrix @ x - rhs)
    free = x > 0
    residual_free = np.abs(gradient[free])
    residual_active = np.maximum(-gradient[~free], 0.0)
    return float(np.max(np.concatenate([residual_free, residual_active, [0.0]])))


def nnls(matrix, rhs, max_iter: Optional[int] = None, tol: Optional[float] = None) -> SolverResult:
    """
    非负最小二乘 min ‖Ax - b‖² s.t. x ≥ 0

    Args:
        matrix: A，形状 (m, n)
        rhs: b，形状 (m,)
        max_iter: 迭代上限（默认 3n + 30）
        tol: 对偶可行性容差

    Returns:
        SolverResult
    """
    A = np.atleast_2d(np.asarray(matrix, dtype=float))
    b = np.atleast_1d(np.asarray(rhs, dtype=float))
    m, n = A.shape
    if b.shape != (m,):
        raise InvalidArgumentError(f"rhs 形状 {b.shape} 与矩阵 {A.shape} 不匹配")
    if n == 0:
        raise InvalidArgumentError("变量个数不能为 0")
    if max_iter is None:
        max_iter = 3 * n + 30
    if tol is None:
        tol = 10 * EPS * max(m, n) * max(1.0, np.max(np.abs(A))) * max(1.0, np.max(np.abs(b)))

    def solve_passive(passive: np.ndarray) -> np.ndarray:
        s = np.zeros(n)
        if np.any(passive):
            s[passive] = lstsq(A[:, passive], b)[0]
        return s

    x = np.zeros(n)
    passive = np.zeros(n, dtype=bool)
    w = A.T @ (b - A @ x)
    blocked = np.zeros(n, dtype=bool)
    iterations = 0

    while True:
        candidates = ~passive & ~blocked & (w > tol)
        if not np.any(candidates):
            break
        j = int(np.argmax(np.where(candidates, w, -np.inf)))
        passive[j] = True
        s = solve_passive(passive)

        # 舍入导致无法进入的变量本轮不再选择
        if s[j] <= 0:
            passive[j] = False
            blocked[j] = True
            continue

        while np.any(s[passive] <= 0):
            iterations += 1
            if iterations > max_iter:
                raise SolverError("NNLS 达到迭代上限", {"iterations": iterations})
            blocking = np.flatnonzero(passive & (s <= 0))
            ratios = x[blocking] / (x[blocking] - s[blocking])
            step = np.min(ratios)
            x = x + step * (s - x)
            x[blocking[np.argmin(ratios)]] = 0.0
            passive &= x > 0
            x[~passive] = 0.0
            s = solve_passive(passive)

        x = s
        w = A.T @ (b - A @ x)
        blocked[:] = False
        iterations += 1
        if iterations > max_iter:
            raise SolverError("NNLS 达到迭代上限", {"iterations": iterations})

    residual = A @ x - b
    result = SolverResult(
        x=x,
        objective=float(residual @ residual),
        iterations=iterations,
        kkt_residual=nnls_kkt_residual(A, b, x),
        active_set=[int(i) for i in np.flatnonzero(x == 0)],
    )
    diag_logger.debug(f"NNLS: n={n}, iterations={iterations}, kkt={result.kkt_residual:.2e}")
    return result


def constrained_lsq(
    matrix,
    rhs,
    constraint_matrix,
    constraint_rhs=None,
    feas_tol: float = 1e-8,
    stat_tol: float = 1e-8,
    max_iter: int = 100_000,
) -> SolverResult:
    """
    线性不等式约束最小二乘 min ‖Mv - y‖² s.t. Gv ≤ h

    对偶有效集法：从无约束最优点出发，每次加入违反最严重的约束，
    通过部分步长移除乘子变为零的约束，直到所有约束满足（≤ feas_tol）。

    Args:
        matrix: M，形状 (m, n)，列满秩
        rhs: y
        constraint_matrix: G，形状 (p, n)
        constraint_rhs: h（默认全零）
        feas_tol: 可行性容差
        stat_tol: 相对平稳性容差（超出时只告警）
        max_iter: 迭代上限

    Returns:
        SolverResult（kkt_residual 为相对平稳性残差）
    """
    M = np.atleast_2d(np.asarray(matrix, dtype=float))
    y = np.asarray(rhs, dtype=float).reshape(-1)
    G = np.atleast_2d(np.asarray(constraint_matrix, dtype=float))
    h = np.zeros(G.shape[0]) if constraint_rhs is None else np.asarray(constraint_rhs, dtype=float).reshape(-1)
    n = M.shape[1]
    if G.shape[1] != n or h.shape[0] != G.shape[0] or y.shape[0] != M.shape[0]:
        raise InvalidArgumentError("约束最小二乘的矩阵维度不一致")

    # 1. 列缩放 + QR：Hessian = RᵀR，避免显式形成 MᵀM
    column_scale = np.linalg.norm(M, axis=0)
    column_scale[column_scale == 0] = 1.0
    Ms = M / column_scale
    Gs = G / column_scale
    _, R = qr(Ms, mode="economic")
    diag = np.abs(np.diag(R))
    if diag.size < n or np.min(diag) <= 1e3 * EPS * np.max(diag):
        raise SolverError("最小二乘矩阵列秩亏损", {"n": n, "min_diag": float(np.min(diag)) if diag.size else 0.0})

    def hess_inv(vec: np.ndarray) -> np.ndarray:
        return solve_triangular(R, solve_triangular(R, vec, trans="T"), lower=False)

    c = -(Ms.T @ y)
    v = lstsq(Ms, y)[0]

    # 约束统一写成 n_iᵀv ≥ b_i
    normals = -Gs
    bounds = -h

    active: List[int] = []
    multipliers = np.zeros(0)
    iterations = 0

    while True:
        violation = Gs @ v - h
        p = int(np.argmax(violation))
        if violation[p] <= feas_tol:
            break

        u_plus = np.append(multipliers, 0.0)
        while True:
            iterations += 1
            if iterations > max_iter:
                raise SolverError(
                    "约束最小二乘达到迭代上限",
                    {"iterations": iterations, "max_violation": float(np.max(Gs @ v - h))},
                )
            n_p = normals[p]
            hinv_np = hess_inv(n_p)
            q = len(active)
            if q:
                N = normals[active].T
                J = np.column_stack([hess_inv(N[:, i]) for i in range(q)])
                r = solve(N.T @ J, N.T @ hinv_np, assume_a="sym")
                z = hinv_np - J @ r
            else:
                r = np.zeros(0)
                z = hinv_np

            # 部分步长：乘子先降为零的有效约束
            t1, k_drop = np.inf, None
            if q:
                r_tol = 1e-12 * max(1.0, float(np.max(np.abs(r))))
                positive = np.flatnonzero(r > r_tol)
                if positive.size:
                    ratios = u_plus[positive] / r[positive]
                    k_drop = int(positive[np.argmin(ratios)])
                    t1 = float(np.min(ratios))

            # 完全步长：使约束 p 恰好成立
            slack = n_p @ v - bounds[p]
            curvature = z @ n_p
            t2 = -slack / curvature if curvature > 1e-12 * (n_p @ hinv_np) else np.inf

            t = min(t1, t2)
            if not np.isfinite(t):
                raise SolverError("约束最小二乘不可行", {"constraint": p, "iterations": iterations})

            if np.isfinite(t2):
                v = v + t * z
            u_plus[:q] -= t * r
            u_plus[q] += t

            if t == t2:
                active.append(p)
                multipliers = u_plus
                break

            # 移除约束 k_drop，继续尝试加入 p
            del active[k_drop]
            u_plus = np.delete(u_plus, k_drop)

    # 2. 收敛诊断
    gradient = Ms.T @ (Ms @ v) + c
    dual = normals[active].T @ multipliers if active else np.zeros(n)
    scale = max(float(np.linalg.norm(c)), float(np.linalg.norm(Ms.T @ (Ms @ v))), np.finfo(float).tiny)
    stationarity = float(np.linalg.norm(gradient - dual) / scale)
    if stationarity > stat_tol:
        diag_logger.warning(f"Constrained LSQ stationarity {stationarity:.2e} above {stat_tol:.0e}")

    x = v / column_scale
    residual = M @ x - y
    result = SolverResult(
        x=x,
        objective=float(residual @ residual),
        iterations=iterations,
        kkt_residual=stationarity,
        max_violation=float(max(np.max(G @ x - h), 0.0)) if G.shape[0] else 0.0,
        active_set=[int(i) for i in active],
    )
    diag_logger.debug(
        f"Constrained LSQ: n={n}, constraints={G.shape[0]}, active={len(active)}, iterations={iterations}"
    )
    return result
