"""
命令行模块
子命令：synth（合成数据集）、continue（运行流水线）、eval（求谱曲线）

退出码：0 完成；2 参数/解析错误；3 数值阶段失败。
"""

import argparse
import json
import sys
import typing
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import yaml
from loguru import logger
from pydantic import ValidationError

from core.model import add_noise, average_magnitude, load_reference_model, parse_model, synthesize
from core.recover import eval_spectral
from main_pipeline import run_pipeline
from utils import ContinuationError, PipelineConfig, PipelineStageError, Reconstruction, setup_logging

from .formats import read_dataset, read_result, write_curve, write_dataset, write_result

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_STAGE_FAILURE = 3

REFERENCE_PREFIX = "ref:"
# continue 命令默认输出的曲线点数与两端留白
DEFAULT_CURVE_COUNT = 2001
DEFAULT_CURVE_MARGIN = 1.0


class UsageError(Exception):
    """命令行参数错误"""


def load_model_spec(text: str):
    """
    解析谱模型描述

    支持三种写法：ref:<参考模型名>、JSON/YAML 文件路径、内联 JSON。
    """
    if text.startswith(REFERENCE_PREFIX):
        return load_reference_model(text[len(REFERENCE_PREFIX):])
    path = Path(text)
    if path.suffix.lower() in (".json", ".yaml", ".yml"):
        if not path.exists():
            raise UsageError(f"模型文件不存在: {path}")
        with open(path, "r", encoding="utf-8") as f:
            return parse_model(yaml.safe_load(f))
    try:
        return parse_model(json.loads(text))
    except json.JSONDecodeError as e:
        raise UsageError(f"无法解析模型描述: {e}") from e


def load_config_file(path: Path) -> Dict[str, Any]:
    """读取配置文件（YAML/JSON 映射，或结果文件中回显的 config）"""
    with open(path, "r", encoding="utf-8") as f:
        data = yaml.safe_load(f) or {}
    if "reconstruction" in data:
        data = data["reconstruction"].get("config") or {}
    if not isinstance(data, dict):
        raise UsageError(f"配置文件必须是映射: {path}")
    return data


def _field_type(annotation) -> type:
    """Optional[X] → X"""
    args = [a for a in typing.get_args(annotation) if a is not type(None)]
    return args[0] if args else annotation


def add_config_flags(parser: argparse.ArgumentParser) -> None:
    """为 PipelineConfig 的每个字段添加一个命令行参数（未给出时为 None）"""
    group = parser.add_argument_group("pipeline config")
    for name, field in PipelineConfig.model_fields.items():
        flag = "--" + name.replace("_", "-")
        kind = _field_type(field.annotation)
        help_text = f"{field.description}（默认: {field.default}）"
        if kind is bool:
            group.add_argument(flag, dest=name, action=argparse.BooleanOptionalAction, default=None, help=help_text)
        else:
            group.add_argument(flag, dest=name, type=kind, default=None, help=help_text)


def config_from_args(args: argparse.Namespace) -> PipelineConfig:
    """配置文件打底，命令行参数逐项覆盖"""
    base = PipelineConfig(**load_config_file(Path(args.config))) if args.config else PipelineConfig()
    overrides = {name: getattr(args, name) for name in PipelineConfig.model_fields}
    return base.with_overrides(**overrides)


def default_curve_window(recon: Reconstruction) -> tuple:
    """极点实部范围两侧各留 1"""
    if recon.n_poles == 0:
        return -DEFAULT_CURVE_MARGIN, DEFAULT_CURVE_MARGIN
    real = recon.poles.real
    return float(np.min(real)) - DEFAULT_CURVE_MARGIN, float(np.max(real)) + DEFAULT_CURVE_MARGIN


def curve_grid(x_min: float, x_max: float, count: int) -> np.ndarray:
    """严格递增的均匀网格"""
    if count < 2:
        raise UsageError(f"count={count} 必须不小于 2")
    if not x_max > x_min:
        raise UsageError(f"需要 x_max > x_min，当前 [{x_min}, {x_max}]")
    return np.linspace(x_min, x_max, count)


def cmd_synth(args: argparse.Namespace) -> int:
    """合成数据集并打印 M 与 σM"""
    model = load_model_spec(args.model)
    clean = synthesize(model, args.beta, args.n_points, 0.0, args.seed)
    magnitude = average_magnitude(clean.samples)
    dataset = add_noise(clean, args.sigma, args.seed)
    write_dataset(dataset, args.out)

    print(f"M={magnitude:.17g}")
    print(f"sigma_M={args.sigma * magnitude:.17g}")
    logger.info(f"数据集已写出: {args.out}（N={dataset.n_points}）")
    return EXIT_OK


def cmd_continue(args: argparse.Namespace) -> int:
    """运行分子或凝聚态流水线并写出结果文件"""
    config = config_from_args(args)
    dataset = read_dataset(args.input)
    recon = run_pipeline(args.case, dataset, config)

    # 附带一条默认谱曲线，便于直接作图
    x_min, x_max = default_curve_window(recon)
    x_min = args.curve_x_min if args.curve_x_min is not None else x_min
    x_max = args.curve_x_max if args.curve_x_max is not None else x_max
    x = curve_grid(x_min, x_max, args.curve_count)
    eta = recon.eta if recon.eta is not None else config.eta
    write_result(args.out, recon, x, eval_spectral(recon, x, eta), eta)

    prony = recon.diagnostics.prony
    print(f"rank={prony.rank if prony is not None else 0}")
    print(f"poles={recon.n_poles}")
    print(f"residual={recon.residual:.17g}")
    for message in recon.diagnostics.warnings:
        logger.warning(f"诊断: {message}")
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    """由结果文件求均匀网格上的谱曲线"""
    recon = read_result(args.result)
    x = curve_grid(args.x_min, args.x_max, args.count)
    write_curve(args.out, x, eval_spectral(recon, x, args.eta))
    logger.info(f"谱曲线已写出: {args.out}（{args.count} 点, η={args.eta}）")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    """构建命令行解析器"""
    parser = argparse.ArgumentParser(prog="acont", description="Matsubara 数据的解析延拓")
    parser.add_argument("--log-level", default=None, help="控制台日志级别（覆盖 ACONT_LOG_LEVEL）")
    subparsers = parser.add_subparsers(dest="command", required=True)

    synth = subparsers.add_parser("synth", help="由谱模型合成含噪 Matsubara 数据集")
    synth.add_argument("--model", required=True, help="ref:<名称>、模型文件路径或内联 JSON")
    synth.add_argument("--beta", type=float, required=True, help="逆温度 β")
    synth.add_argument("--n-points", type=int, required=True, help="Matsubara 点数 N")
    synth.add_argument("--sigma", type=float, default=0.0, help="相对噪声水平 σ")
    synth.add_argument("--seed", type=int, default=0, help="噪声随机种子")
    synth.add_argument("--out", required=True, help="输出数据集文件")
    synth.set_defaults(handler=cmd_synth)

    cont = subparsers.add_parser("continue", help="运行解析延拓流水线")
    cont.add_argument("case", choices=["molecule", "cdm"])
    cont.add_argument("--in", dest="input", required=True, help="输入数据集文件")
    cont.add_argument("--out", required=True, help="输出结果文件（JSON）")
    cont.add_argument("--config", default=None, help="配置文件（YAML/JSON，或已有结果文件）")
    cont.add_argument("--curve-x-min", type=float, default=None)
    cont.add_argument("--curve-x-max", type=float, default=None)
    cont.add_argument("--curve-count", type=int, default=DEFAULT_CURVE_COUNT)
    add_config_flags(cont)
    cont.set_defaults(handler=cmd_continue)

    evaluate = subparsers.add_parser("eval", help="求重建谱函数的曲线")
    evaluate.add_argument("--result", required=True, help="结果文件")
    evaluate.add_argument("--x-min", type=float, required=True)
    evaluate.add_argument("--x-max", type=float, required=True)
    evaluate.add_argument("--count", type=int, required=True)
    evaluate.add_argument("--eta", type=float, required=True, help="展宽 η > 0")
    evaluate.add_argument("--out", required=True, help="输出曲线文件（CSV）")
    evaluate.set_defaults(handler=cmd_eval)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """命令行入口，返回退出码"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE

    if args.log_level:
        setup_logging(args.log_level.upper())

    try:
        return args.handler(args)
    except PipelineStageError as e:
        logger.error(f"阶段失败 {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_STAGE_FAILURE
    except (UsageError, ValidationError, ContinuationError, ValueError, KeyError, OSError) as e:
        logger.error(f"参数或输入错误: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
