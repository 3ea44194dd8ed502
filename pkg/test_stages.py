"""
阶段框架测试
上下文传递、警告收集、阶段标签与统计
"""

import pytest
from loguru import logger

from core.model import synthesize
from main_pipeline import ContinuationPipeline, run_pipeline
from scripts.reproduce_experiments import stage_stats_frame
from stages import BaseStage, StagePipeline, resolve_epsilon
from utils import InvalidArgumentError, PipelineConfig, PipelineStageError, PoleModel


class AddStage(BaseStage):
    def __init__(self, key, value):
        super().__init__(f"Add-{key}", "interp")
        self.key = key
        self.value = value

    def process(self, context):
        return {self.key: context.get("total", 0) + self.value, "total": context.get("total", 0) + self.value}


class WarnStage(BaseStage):
    def __init__(self):
        super().__init__("Warn", "prony")

    def process(self, context):
        logger.warning("rank saturated")
        return {}


class FailStage(BaseStage):
    def __init__(self):
        super().__init__("Fail", "recover")

    def process(self, context):
        raise InvalidArgumentError("no poles")


class TestStagePipeline:
    def test_context_is_chained(self):
        pipeline = StagePipeline("test").add_stage(AddStage("a", 1)).add_stage(AddStage("b", 2))
        context = pipeline.execute_pipeline({"input": "x"})
        assert context["input"] == "x"
        assert context["total"] == 3
        assert set(context["stage_times"]) == {"Add-a", "Add-b"}

    def test_warnings_collected_per_run(self):
        pipeline = StagePipeline("test").add_stage(WarnStage())
        first = pipeline.execute_pipeline({})
        assert first["warnings"] == ["rank saturated"]

        # 运行之外的警告不被收集
        logger.warning("outside any run")
        second = pipeline.execute_pipeline({})
        assert second["warnings"] == ["rank saturated"]

    def test_stage_error_carries_label(self):
        pipeline = StagePipeline("test").add_stage(AddStage("a", 1)).add_stage(FailStage())
        with pytest.raises(PipelineStageError) as info:
            pipeline.execute_pipeline({})
        assert info.value.stage == "recover"
        assert str(info.value) == "[recover] no poles"
        assert isinstance(info.value.cause, InvalidArgumentError)

    def test_stats(self):
        stage = FailStage()
        pipeline = StagePipeline("test").add_stage(stage)
        for _ in range(2):
            with pytest.raises(PipelineStageError):
                pipeline.execute_pipeline({})
        stats = pipeline.get_pipeline_stats()["stage_stats"][0]
        assert stats["total_runs"] == 2
        assert stats["error_count"] == 2
        assert stats["success_count"] == 0
        assert stats["average_processing_time"] >= 0.0


class TestContinuationPipeline:
    def test_unknown_case(self):
        with pytest.raises(ValueError):
            ContinuationPipeline("atom")

    def test_epsilon_resolution(self, molecule_dataset, quasiparticles):
        assert resolve_epsilon(molecule_dataset, PipelineConfig(epsilon=0.3)) == 0.3
        assert resolve_epsilon(molecule_dataset, PipelineConfig()) == pytest.approx(1.0)
        foreign = synthesize(quasiparticles, 100.0, 16, 0.0, 0)
        with pytest.raises(InvalidArgumentError):
            resolve_epsilon(foreign, PipelineConfig())

    def test_molecule_without_gap_fails_in_interp(self, quasiparticles):
        dataset = synthesize(quasiparticles, 100.0, 16, 0.0, 0)
        with pytest.raises(PipelineStageError) as info:
            run_pipeline("molecule", dataset)
        assert info.value.stage == "interp"

    def test_single_quasiparticle_end_to_end(self):
        model = PoleModel(poles=[{"location": (0.5, -0.1), "weight": (6.283185307179586, 0.0)}])
        dataset = synthesize(model, 100.0, 64, 0.0, 0)
        recon = run_pipeline("cdm", dataset, PipelineConfig(noise_floor=1e-6))

        assert recon.kind == "condensed"
        assert recon.n_poles == 1
        assert abs(recon.poles[0] - (0.5 - 0.1j)) <= 1e-6
        assert recon.config.noise_floor == 1e-6
        diagnostics = recon.diagnostics
        assert diagnostics.prony.rank == 1
        # H = 1/G 为线性函数，倒数基拟合残差只剩舍入误差
        assert diagnostics.interp_residual <= 1e-12
        assert list(diagnostics.stage_times) == ["ReciprocalSpline", "Unzip", "Prony", "Pullback", "CdmRecover"]

    def test_statistics_accumulate_across_runs(self):
        model = PoleModel(poles=[{"location": (0.5, -0.1), "weight": (6.283185307179586, 0.0)}])
        pipeline = ContinuationPipeline("cdm")
        for seed in range(2):
            pipeline.run(synthesize(model, 100.0, 64, 0.0, seed), PipelineConfig(noise_floor=1e-6))

        frame = stage_stats_frame(pipeline)
        assert list(frame["stage_name"]) == ["ReciprocalSpline", "Unzip", "Prony", "Pullback", "CdmRecover"]
        assert (frame["pipeline"] == "cdm-continuation").all()
        assert (frame["total_runs"] == 2).all()
        assert (frame["error_count"] == 0).all()
