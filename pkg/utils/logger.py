"""
日志配置模块
控制台只输出到 stderr，stdout 留给命令结果；设置 log_dir 时另写文件日志
"""

import sys

from loguru import logger

from .config import settings

CONSOLE_FORMAT = (
    "<green>{time:HH:mm:ss.SSS}</green> | <level>{level: <8}</level> | "
    "<cyan>{name}</cyan>:<cyan>{line}</cyan> - <level>{message}</level>"
)
FILE_FORMAT = "{time:YYYY-MM-DD HH:mm:ss.SSS} | {level: <8} | {name}:{function}:{line} - {message}"
DIAGNOSTICS_FORMAT = "{time:YYYY-MM-DD HH:mm:ss.SSS} | {extra[stage_name]: <16} | {message}"


def _is_diagnostics(record) -> bool:
    return record["extra"].get("log_type") == "diagnostics"


def setup_logging(level: str | None = None):
    """重建全部日志处理器；level 覆盖配置中的控制台级别"""
    logger.remove()
    logger.add(
        sys.stderr,
        level=level or settings.log_level,
        format=CONSOLE_FORMAT,
        colorize=settings.log_colorize,
    )

    if settings.log_dir is None:
        return
    settings.log_dir.mkdir(parents=True, exist_ok=True)

    logger.add(
        settings.log_dir / "app.log",
        level="DEBUG",
        format=FILE_FORMAT,
        rotation="10 MB",
        retention="7 days",
        compression="zip",
    )
    # 奇异值、残差等逐阶段数值
    logger.add(
        settings.log_dir / "diagnostics.log",
        level="DEBUG",
        format=DIAGNOSTICS_FORMAT,
        filter=_is_diagnostics,
        rotation="5 MB",
        retention="30 days",
    )


setup_logging()


def get_stage_logger(stage_name: str):
    """阶段日志，记录带 stage_name"""
    return logger.bind(stage_name=stage_name)


def get_diagnostics_logger(stage_name: str = "diagnostics"):
    return logger.bind(stage_name=stage_name, log_type="diagnostics")
