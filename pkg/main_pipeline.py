"""
主流水线管理器
整合所有阶段，提供分子与凝聚态两条完整的解析延拓流水线
"""

from typing import Any, Dict, Literal, Optional

from stages import (
    CdmRecoverStage,
    MoleculeRecoverStage,
    PoleBasisInterpStage,
    PronyStage,
    PullbackStage,
    ReciprocalSplineStage,
    StagePipeline,
    UnzipStage,
)
from utils import (
    MatsubaraDataset,
    PipelineConfig,
    Reconstruction,
    ReconstructionDiagnostics,
    Timer,
    get_stage_logger,
)

logger = get_stage_logger("MainPipeline")

Case = Literal["molecule", "cdm"]


class ContinuationPipeline:
    """Matsubara 数据 → 实轴谱 的解析延拓流水线"""

    def __init__(self, case: Case):
        if case not in ("molecule", "cdm"):
            raise ValueError(f"未知的情形: {case}")
        self.case = case
        self.pipeline = StagePipeline(f"{case}-continuation")
        self._initialize_pipeline()

    def _initialize_pipeline(self):
        """按顺序添加所有阶段"""
        if self.case == "molecule":
            self.pipeline.add_stage(PoleBasisInterpStage())
        else:
            self.pipeline.add_stage(ReciprocalSplineStage())
        self.pipeline.add_stage(UnzipStage())
        self.pipeline.add_stage(PronyStage())
        self.pipeline.add_stage(PullbackStage())
        if self.case == "molecule":
            self.pipeline.add_stage(MoleculeRecoverStage())
        else:
            self.pipeline.add_stage(CdmRecoverStage())

    def run(self, dataset: MatsubaraDataset, config: Optional[PipelineConfig] = None) -> Reconstruction:
        """
        运行流水线

        Args:
            dataset: Matsubara 数据集
            config: 流水线参数（默认全部取默认值）

        Returns:
            附带诊断信息的 Reconstruction

        Raises:
            PipelineStageError: 任一阶段失败（带阶段标签）
        """
        config = config or PipelineConfig()

        with Timer() as timer:
            logger.info(f"开始解析延拓: case={self.case}, β={dataset.beta}, N={dataset.n_points}")
            context = self.pipeline.execute_pipeline({"dataset": dataset, "config": config})
            recon = self._assemble(context, config)
            logger.info(f"解析延拓完成: {recon.n_poles} 个极点, 残差 {recon.residual:.3e}, 耗时 {timer.get_elapsed():.3f}s")
        return recon

    @staticmethod
    def _assemble(context: Dict[str, Any], config: PipelineConfig) -> Reconstruction:
        """将上下文中的中间结果汇总为诊断信息"""
        recon: Reconstruction = context["reconstruction"]
        solver = recon.diagnostics
        diagnostics = ReconstructionDiagnostics(
            prony=context["prony"],
            pullback_poles=[complex(p) for p in context["pullback_poles"]],
            discarded_poles=context.get("discarded_poles", []),
            discarded_imag=context.get("discarded_imag", []),
            n_interp=context.get("n_interp"),
            n_samples=context["n_samples"],
            interp_residual=context.get("interp_residual"),
            kkt_residual=solver.kkt_residual,
            max_violation=solver.max_violation,
            solver_iterations=solver.solver_iterations,
            stage_times=dict(context["stage_times"]),
            warnings=list(context["warnings"]),
        )
        return recon.model_copy(update={"config": config, "diagnostics": diagnostics})

    def get_pipeline_statistics(self) -> Dict[str, Any]:
        """获取流水线统计信息"""
        return self.pipeline.get_pipeline_stats()


def run_molecule_pipeline(dataset: MatsubaraDataset, config: Optional[PipelineConfig] = None) -> Reconstruction:
    """分子情形：极点基插值 → 展开 → Prony → 拉回 → 实轴投影 → NNLS"""
    return ContinuationPipeline("molecule").run(dataset, config)


def run_cdm_pipeline(dataset: MatsubaraDataset, config: Optional[PipelineConfig] = None) -> Reconstruction:
    """凝聚态情形：倒数样条 → 展开 → Prony → 拉回 → 下半平面过滤 → 约束最小二乘"""
    return ContinuationPipeline("cdm").run(dataset, config)


def run_pipeline(case: Case, dataset: MatsubaraDataset, config: Optional[PipelineConfig] = None) -> Reconstruction:
    """按情形分派"""
    if case == "molecule":
        return run_molecule_pipeline(dataset, config)
    return run_cdm_pipeline(dataset, config)
