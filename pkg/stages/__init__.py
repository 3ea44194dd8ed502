"""
Stages包初始化文件
"""

from .base_stage import BaseStage, StagePipeline, StageResult
from .continuation_stages import (
    CdmRecoverStage,
    MoleculeRecoverStage,
    PoleBasisInterpStage,
    PronyStage,
    PullbackStage,
    ReciprocalSplineStage,
    UnzipStage,
    resolve_epsilon,
)

__all__ = [
    'BaseStage',
    'StagePipeline',
    'StageResult',
    'PoleBasisInterpStage',
    'ReciprocalSplineStage',
    'UnzipStage',
    'PronyStage',
    'PullbackStage',
    'MoleculeRecoverStage',
    'CdmRecoverStage',
    'resolve_epsilon',
]
