"""
工具模块包初始化文件
"""

from .config import settings, Settings, PipelineConfig
from .logger import get_stage_logger, get_diagnostics_logger, setup_logging
from .errors import *
from .models import *
from .helpers import *

__all__ = [
    'settings',
    'Settings',
    'PipelineConfig',
    'get_stage_logger',
    'get_diagnostics_logger',
    'setup_logging',
    'ContinuationError',
    'InvalidArgumentError',
    'PoleEvaluationError',
    'DomainError',
    'DegenerateSystemError',
    'ZeroSampleError',
    'SolverError',
    'PipelineStageError',
    'matsubara_points',
    'DeltaAtom',
    'DeltaModel',
    'QuasiParticle',
    'PoleModel',
    'GaussianComponent',
    'GaussianMixture',
    'SpectralModel',
    'MatsubaraDataset',
    'FourierCoefficients',
    'PronyResult',
    'ReconstructionDiagnostics',
    'Reconstruction',
    'as_real_array',
    'next_power_of_two',
    'require_even',
    'Timer',
]
