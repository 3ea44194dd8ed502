"""
解析延拓的具体阶段
插值 → 展开采样 → Prony → 极点拉回 → 权重恢复

所有阶段从上下文读取 dataset 与 config，并只返回新增字段。
"""

from typing import Any, Dict

import numpy as np
from scipy.linalg import svdvals

from core.interp import chebyshev_pole_nodes, default_n_interp, fit_pole_weights, fit_reciprocal_spline
from core.prony import (
    build_hankel,
    coefficients_from_samples,
    default_n_samples,
    estimate_noise_floor,
    prony_poles,
)
from core.recover import (
    constraint_grid_from_config,
    empty_reconstruction,
    filter_lower_half,
    fit_cdm_weights,
    fit_molecule_weights,
    project_to_real_axis,
)
from core.unzip import CdmMap, MoleculeMap, circle_samples, pullback_pole
from utils import DeltaModel, InvalidArgumentError, MatsubaraDataset, PipelineConfig

from .base_stage import BaseStage


def resolve_epsilon(dataset: MatsubaraDataset, config: PipelineConfig) -> float:
    """能隙先验：优先取配置，其次取数据集记录的 δ 原子模型"""
    if config.epsilon is not None:
        return config.epsilon
    if isinstance(dataset.model, DeltaModel):
        return dataset.model.gap
    raise InvalidArgumentError("分子情形需要能隙先验 epsilon（配置或数据集模型中均未给出）")


class PoleBasisInterpStage(BaseStage):
    """分子情形：极点基最小二乘插值"""

    def __init__(self):
        super().__init__("PoleBasisInterp", "interp", "极点基最小二乘插值")

    def process(self, context: Dict[str, Any]) -> Dict[str, Any]:
        dataset: MatsubaraDataset = context["dataset"]
        config: PipelineConfig = context["config"]

        epsilon = resolve_epsilon(dataset, config)
        n_interp = config.n_interp or default_n_interp(dataset.n_points, dataset.b / epsilon)
        nodes = chebyshev_pole_nodes(epsilon, n_interp)
        interpolant = fit_pole_weights(
            dataset, nodes, svd_cutoff=config.svd_cutoff, reflect=config.reflect_samples
        )
        self.logger.info(
            f"ε={epsilon:g}, N_I={n_interp}, 保留秩 {interpolant.retained_rank}, 残差 {interpolant.residual:.3e}"
        )
        return {
            "interpolant": interpolant,
            "unzip_map": MoleculeMap(b=dataset.b),
            "scale_ratio": dataset.b / epsilon,
            "n_interp": n_interp,
            "interp_residual": interpolant.residual,
        }


class ReciprocalSplineStage(BaseStage):
    """凝聚态情形：倒数样条插值"""

    def __init__(self):
        super().__init__("ReciprocalSpline", "interp", "H = 1/G 的样条插值")

    def process(self, context: Dict[str, Any]) -> Dict[str, Any]:
        dataset: MatsubaraDataset = context["dataset"]
        config: PipelineConfig = context["config"]

        if dataset.n_points < 2:
            raise InvalidArgumentError("凝聚态情形至少需要 2 个 Matsubara 点")
        interpolant = fit_reciprocal_spline(
            dataset, order=config.spline_order, deflate=config.spline_deflate
        )
        result = {
            "interpolant": interpolant,
            "unzip_map": CdmMap(a=dataset.a, b=dataset.b),
            "scale_ratio": float(np.sqrt(dataset.b / dataset.a)),
        }
        if interpolant.base is not None:
            self.logger.info(
                f"倒数基保留秩 {interpolant.base.retained_rank}, 加权残差 {interpolant.base.residual:.3e}"
            )
            result["interp_residual"] = interpolant.base.residual
        return result


class UnzipStage(BaseStage):
    """单位圆采样与 Fourier 系数"""

    def __init__(self):
        super().__init__("Unzip", "unzip", "区间展开为单位圆并计算 Fourier 系数")

    def process(self, context: Dict[str, Any]) -> Dict[str, Any]:
        config: PipelineConfig = context["config"]

        n_samples = config.n_samples or default_n_samples(config.d_max, config.l, context["scale_ratio"])
        samples = circle_samples(context["interpolant"], context["unzip_map"], n_samples)
        coefficients = coefficients_from_samples(samples)
        self.logger.info(f"N_s={n_samples}, |Ĝ_1|={abs(coefficients.get(1)):.3e}")
        return {"n_samples": n_samples, "coefficients": coefficients}


class PronyStage(BaseStage):
    """秩判定与外部极点"""

    def __init__(self):
        super().__init__("Prony", "prony", "Hankel 秩判定与零空间多项式求根")

    def process(self, context: Dict[str, Any]) -> Dict[str, Any]:
        dataset: MatsubaraDataset = context["dataset"]
        config: PipelineConfig = context["config"]
        coefficients = context["coefficients"]

        noise_floor = config.noise_floor
        if noise_floor is None:
            singular_values = svdvals(build_hankel(coefficients, config.d_max, config.l))
            noise_floor, _ = estimate_noise_floor(singular_values, dataset.noise_sigma)

        result = prony_poles(coefficients, config.d_max, config.l, noise_floor, config.tol_interior)
        self.logger.info(
            f"秩 d={result.rank}（阈值 {noise_floor:.1e}），外部极点 {result.exterior_poles.size} 个"
        )
        return {"prony": result}


class PullbackStage(BaseStage):
    """外部极点拉回 z 平面"""

    def __init__(self):
        super().__init__("Pullback", "unzip", "t_j → ξ_j")

    def process(self, context: Dict[str, Any]) -> Dict[str, Any]:
        exterior = context["prony"].exterior_poles
        if exterior.size == 0:
            return {"pullback_poles": np.zeros(0, dtype=complex)}
        poles = np.atleast_1d(np.asarray(pullback_pole(context["unzip_map"], exterior), dtype=complex))
        return {"pullback_poles": poles}


class MoleculeRecoverStage(BaseStage):
    """实轴投影 + 非负权重拟合"""

    def __init__(self):
        super().__init__("MoleculeRecover", "recover", "非负最小二乘权重")

    def process(self, context: Dict[str, Any]) -> Dict[str, Any]:
        dataset: MatsubaraDataset = context["dataset"]
        config: PipelineConfig = context["config"]

        poles, discarded_imag, dropped = project_to_real_axis(context["pullback_poles"])
        if poles.size == 0:
            self.logger.warning("未检测到极点，返回空重建")
            recon = empty_reconstruction(dataset, "molecule")
        else:
            recon = fit_molecule_weights(dataset, poles, prune_ratio=config.prune_ratio, max_iter=config.max_iter)
        return {
            "reconstruction": recon,
            "discarded_imag": discarded_imag,
            "discarded_poles": [complex(p) for p in dropped] + recon.diagnostics.discarded_poles,
        }


class CdmRecoverStage(BaseStage):
    """下半平面过滤 + 正性约束权重拟合"""

    def __init__(self):
        super().__init__("CdmRecover", "recover", "约束最小二乘权重")

    def process(self, context: Dict[str, Any]) -> Dict[str, Any]:
        dataset: MatsubaraDataset = context["dataset"]
        config: PipelineConfig = context["config"]

        poles, discarded = filter_lower_half(context["pullback_poles"], config.lower_half_cutoff)
        if poles.size == 0:
            self.logger.warning("下半平面中没有极点，返回空重建")
            recon = empty_reconstruction(dataset, "condensed", eta=config.eta)
        else:
            grid = constraint_grid_from_config(config, poles)
            recon = fit_cdm_weights(
                dataset,
                poles,
                grid=grid,
                feas_tol=config.feas_tol,
                stat_tol=config.stat_tol,
                max_iter=config.max_iter,
                eta=config.eta,
            )
        return {"reconstruction": recon, "discarded_imag": [], "discarded_poles": discarded}
