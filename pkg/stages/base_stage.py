"""
阶段基础框架
为流水线中的每个数值阶段提供统一的结构、计时、统计与错误标注
"""

import uuid
from abc import ABC, abstractmethod
from typing import Any, Dict, List

from loguru import logger
from pydantic import BaseModel, Field

from utils import ContinuationError, PipelineStageError, Timer, get_stage_logger


class StageResult(BaseModel):
    """单个阶段的输出"""

    stage_name: str
    data: Dict[str, Any] = Field(default_factory=dict)
    processing_time: float = 0.0


class BaseStage(ABC):
    """阶段基类"""

    def __init__(self, name: str, label: str, description: str = ""):
        self.name = name
        # 错误信息中的阶段标签（interp / unzip / prony / recover）
        self.label = label
        self.description = description
        self.logger = get_stage_logger(name)

        # 运行统计
        self.total_runs = 0
        self.total_processing_time = 0.0
        self.success_count = 0
        self.error_count = 0

    @abstractmethod
    def process(self, context: Dict[str, Any]) -> Dict[str, Any]:
        """读取上下文，返回并入上下文的新字段"""

    def validate_input(self, context: Dict[str, Any]) -> None:
        """前置检查；不满足时抛出 ContinuationError"""

    def execute(self, context: Dict[str, Any]) -> StageResult:
        """计时执行 process，数值错误包装为带阶段标签的 PipelineStageError"""
        with Timer() as timer:
            self.logger.debug(f"开始处理: {self.name}")
            self.total_runs += 1

            try:
                self.validate_input(context)
                data = self.process(context)
            except ContinuationError as e:
                self.error_count += 1
                self.total_processing_time += timer.get_elapsed()
                self.logger.error(f"阶段失败: {self.name}: {e}")
                raise PipelineStageError(self.label, e) from e

            self.success_count += 1
            self.total_processing_time += timer.get_elapsed()
            self.logger.debug(f"处理完成: {self.name}, 耗时: {timer.get_elapsed():.3f}s")
            return StageResult(stage_name=self.name, data=data, processing_time=timer.get_elapsed())

    def get_performance_stats(self) -> Dict[str, Any]:
        """本阶段累计运行统计"""
        average = self.total_processing_time / self.total_runs if self.total_runs else 0.0
        return {
            "stage_name": self.name,
            "label": self.label,
            "total_runs": self.total_runs,
            "success_count": self.success_count,
            "error_count": self.error_count,
            "total_processing_time": self.total_processing_time,
            "average_processing_time": average,
        }


class StagePipeline:
    """阶段流水线：顺序执行各阶段，上下文逐级传递"""

    def __init__(self, name: str):
        self.name = name
        self.stages: List[BaseStage] = []
        self.logger = get_stage_logger(f"Pipeline-{name}")

    def add_stage(self, stage: BaseStage) -> "StagePipeline":
        """追加阶段，返回自身便于链式调用"""
        self.stages.append(stage)
        return self

    def execute_pipeline(self, context: Dict[str, Any]) -> Dict[str, Any]:
        """
        执行整个流水线

        运行期间发出的 WARNING 级日志被收集到 context["warnings"]，
        各阶段耗时写入 context["stage_times"]。阶段错误以 PipelineStageError 原样抛出。
        """
        current = dict(context)
        current.setdefault("warnings", [])
        current.setdefault("stage_times", {})

        # 只收集本次运行（同一上下文变量）内的警告
        run_id = uuid.uuid4().hex
        collected: List[str] = current["warnings"]
        handler_id = logger.add(
            lambda message: collected.append(message.record["message"]),
            level="WARNING",
            format="{message}",
            filter=lambda record: record["extra"].get("run_id") == run_id,
        )

        try:
            with Timer() as timer, logger.contextualize(run_id=run_id):
                self.logger.info(f"开始执行流水线: {self.name}")
                for stage in self.stages:
                    result = stage.execute(current)
                    times = current["stage_times"]
                    times[stage.name] = times.get(stage.name, 0.0) + result.processing_time
                    current.update(result.data)
                self.logger.info(f"流水线执行完成: {self.name}, 耗时: {timer.get_elapsed():.3f}s")
        finally:
            logger.remove(handler_id)

        return current

    def get_pipeline_stats(self) -> Dict[str, Any]:
        """各阶段统计汇总"""
        return {
            "pipeline_name": self.name,
            "stage_count": len(self.stages),
            "stage_stats": [stage.get_performance_stats() for stage in self.stages],
        }
