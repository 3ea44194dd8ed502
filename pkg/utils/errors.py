"""
异常定义
数值流水线中所有可预期错误的层级结构
"""

from typing import Any, Dict, Optional


class ContinuationError(Exception):
    """解析延拓相关错误的基类"""


class InvalidArgumentError(ContinuationError, ValueError):
    """参数不满足前置条件"""


class PoleEvaluationError(ContinuationError, ZeroDivisionError):
    """在极点处求值"""


class DomainError(ContinuationError, ValueError):
    """求值点超出允许区域"""


class DegenerateSystemError(ContinuationError):
    """线性系统在截断后无有效奇异值"""


class ZeroSampleError(ContinuationError, ZeroDivisionError):
    """倒数插值遇到零样本"""


class SolverError(ContinuationError):
    """优化求解失败（不可行或未收敛）"""

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class PipelineStageError(ContinuationError):
    """带阶段标签的流水线错误"""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause
