# -*- coding: utf-8 -*-
"""
数值实验复现脚本
功能：
1. 分子情形：β=100, N=128，ε ∈ {0.1, 0.05} × σ ∈ {1e-4, 1e-3, 1e-2}
2. 凝聚态情形：β=100, N=256，准粒子/高斯 × σ ∈ {5e-7, 5e-6, 5e-5}，η = 0.01
3. 每个实验写出数据集、结果与谱曲线文件，最后汇总为 summary.csv 与各阶段统计 stage_stats.csv

用法：python scripts/reproduce_experiments.py [--out-dir DIR] [--seed SEED] [--only molecule|cdm]
"""
import argparse
import sys
from pathlib import Path
from typing import Dict, List, Tuple

import numpy as np
import pandas as pd

sys.path.insert(0, str(Path(__file__).parent.parent))

from cli.formats import write_curve, write_dataset, write_result
from core.model import eval_green_gaussian, eval_green_rational, load_reference_model, synthesize
from core.recover import eval_spectral
from main_pipeline import ContinuationPipeline
from utils import GaussianMixture, PipelineConfig, PipelineStageError, get_stage_logger

logger = get_stage_logger("Experiments")

BETA = 100.0
MOLECULE_N = 128
CDM_N = 256
ETA = 0.01
MOLECULE_GRID = [(0.1, "molecule_gap_0.1"), (0.05, "molecule_gap_0.05")]
MOLECULE_SIGMAS = [1e-4, 1e-3, 1e-2]
CDM_MODELS = ["quasiparticles", "gaussians"]
CDM_SIGMAS = [5e-7, 5e-6, 5e-5]
CURVE_X = np.linspace(-3.0, 3.0, 2001)


def broadened_truth(model, x: np.ndarray, eta: float) -> np.ndarray:
    """真实谱在 x + iη 上的 -2 Im G"""
    z = x + 1j * eta
    if isinstance(model, GaussianMixture):
        return -2.0 * np.imag(eval_green_gaussian(model, z, method="faddeeva"))
    return -2.0 * np.imag(eval_green_rational(model, z))


def nearest_pole_error(recovered: np.ndarray, truth: np.ndarray) -> float:
    """每个真实极点到最近恢复极点的距离的最大值"""
    if recovered.size == 0:
        return float("inf")
    return float(max(np.min(np.abs(recovered - t)) for t in truth))


def stage_stats_frame(pipeline: ContinuationPipeline) -> pd.DataFrame:
    """整组实验共用一条流水线，各阶段累计次数、失败数与平均耗时"""
    stats = pipeline.get_pipeline_statistics()
    frame = pd.DataFrame(stats["stage_stats"])
    frame.insert(0, "pipeline", stats["pipeline_name"])
    return frame


def run_molecule_grid(out_dir: Path, seed: int) -> Tuple[List[Dict], pd.DataFrame]:
    """分子情形实验网格"""
    rows = []
    pipeline = ContinuationPipeline("molecule")
    for epsilon, name in MOLECULE_GRID:
        model = load_reference_model(name)
        for sigma in MOLECULE_SIGMAS:
            tag = f"molecule_eps{epsilon:g}_sigma{sigma:g}"
            dataset = synthesize(model, BETA, MOLECULE_N, sigma, seed)
            write_dataset(dataset, out_dir / f"{tag}.csv")

            row = {"experiment": tag, "case": "molecule", "sigma": sigma, "status": "ok"}
            try:
                recon = pipeline.run(dataset, PipelineConfig(epsilon=epsilon))
            except PipelineStageError as e:
                logger.error(f"{tag}: {e}")
                row["status"] = f"failed[{e.stage}]"
                rows.append(row)
                continue

            write_result(out_dir / f"{tag}.json", recon, CURVE_X, eval_spectral(recon, CURVE_X, ETA), ETA)
            row.update(
                rank=recon.diagnostics.prony.rank,
                n_poles=recon.n_poles,
                pole_error=nearest_pole_error(recon.poles.real, model.locations),
                residual=recon.residual,
            )
            rows.append(row)
            print(f"[OK] {tag}: rank={row['rank']}, pole error={row['pole_error']:.2e}")
    return rows, stage_stats_frame(pipeline)


def run_cdm_grid(out_dir: Path, seed: int) -> Tuple[List[Dict], pd.DataFrame]:
    """凝聚态情形实验网格"""
    rows = []
    pipeline = ContinuationPipeline("cdm")
    for name in CDM_MODELS:
        model = load_reference_model(name)
        truth = broadened_truth(model, CURVE_X, ETA)
        for sigma in CDM_SIGMAS:
            tag = f"cdm_{name}_sigma{sigma:g}"
            dataset = synthesize(model, BETA, CDM_N, sigma, seed)
            write_dataset(dataset, out_dir / f"{tag}.csv")

            row = {"experiment": tag, "case": "cdm", "sigma": sigma, "status": "ok"}
            try:
                recon = pipeline.run(dataset, PipelineConfig(eta=ETA))
            except PipelineStageError as e:
                logger.error(f"{tag}: {e}")
                row["status"] = f"failed[{e.stage}]"
                rows.append(row)
                continue

            curve = eval_spectral(recon, CURVE_X, ETA)
            write_result(out_dir / f"{tag}.json", recon, CURVE_X, curve, ETA)
            write_curve(out_dir / f"{tag}_curve.csv", CURVE_X, curve)
            row.update(
                rank=recon.diagnostics.prony.rank,
                n_poles=recon.n_poles,
                curve_error=float(np.linalg.norm(curve - truth) / np.linalg.norm(truth)),
                residual=recon.residual,
            )
            if name == "quasiparticles":
                row["pole_error"] = nearest_pole_error(recon.poles, model.locations)
            rows.append(row)
            print(f"[OK] {tag}: rank={row['rank']}, curve L2 error={row['curve_error']:.2e}")
    return rows, stage_stats_frame(pipeline)


def main():
    parser = argparse.ArgumentParser(description="复现分子与凝聚态两组数值实验")
    parser.add_argument("--out-dir", default="experiments", help="输出目录")
    parser.add_argument("--seed", type=int, default=1, help="噪声随机种子")
    parser.add_argument("--only", choices=["molecule", "cdm"], default=None)
    args = parser.parse_args()

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    rows = []
    stage_stats = []
    if args.only in (None, "molecule"):
        print("正在运行分子情形实验...")
        grid_rows, stats = run_molecule_grid(out_dir, args.seed)
        rows += grid_rows
        stage_stats.append(stats)
    if args.only in (None, "cdm"):
        print("正在运行凝聚态情形实验...")
        grid_rows, stats = run_cdm_grid(out_dir, args.seed)
        rows += grid_rows
        stage_stats.append(stats)

    summary = pd.DataFrame(rows)
    summary_path = out_dir / "summary.csv"
    summary.to_csv(summary_path, index=False)

    print("\n" + "=" * 60)
    print("[Experiment Summary]")
    print("=" * 60)
    print(summary.to_string(index=False))
    print(f"\n[OK] 已保存汇总表: {summary_path}")

    stats_path = out_dir / "stage_stats.csv"
    pd.concat(stage_stats, ignore_index=True).to_csv(stats_path, index=False)
    print(f"[OK] 已保存阶段统计: {stats_path}")


if __name__ == '__main__':
    main()
