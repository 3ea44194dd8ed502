"""
CLI包初始化文件
"""

from .commands import build_parser, main
from .formats import (
    FileFormatError,
    read_curve,
    read_dataset,
    read_result,
    write_curve,
    write_dataset,
    write_result,
)

__all__ = [
    'build_parser',
    'main',
    'FileFormatError',
    'read_dataset',
    'write_dataset',
    'read_result',
    'write_result',
    'read_curve',
    'write_curve',
]
