"""
文件格式模块
数据集文件（JSON 头 + CSV 正文）、结果文件（单个 JSON 文档）与谱曲线文件（CSV）的读写

浮点数一律以 17 位有效数字写出，读回时逐位一致。格式说明见 docs/FILE_FORMATS.md。
"""

import json
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
import pandas as pd

from core.model import parse_model
from utils import (
    ContinuationError,
    MatsubaraDataset,
    PipelineConfig,
    PronyResult,
    Reconstruction,
    ReconstructionDiagnostics,
    matsubara_points,
)

PathLike = Union[str, Path]

RESULT_FORMAT = "acont-result"
RESULT_VERSION = 1
FLOAT_FORMAT = "%.17g"
DATASET_COLUMNS = ["n", "im_z", "re_g", "im_g"]


class FileFormatError(ContinuationError, ValueError):
    """文件内容不符合约定格式"""


def _pairs(values) -> List[List[float]]:
    return [[float(v.real), float(v.imag)] for v in np.asarray(values, dtype=complex).reshape(-1)]


def _from_pairs(pairs) -> np.ndarray:
    array = np.asarray(pairs, dtype=float).reshape(-1, 2)
    return array[:, 0] + 1j * array[:, 1]


# ---------------------------------------------------------------------------
# 数据集文件


def write_dataset(dataset: MatsubaraDataset, path: PathLike) -> Path:
    """
    写出数据集文件

    第一行为 "# " + JSON 头（beta, n_points, sigma, seed, model），其后为 CSV 正文。
    """
    path = Path(path)
    header = {
        "beta": dataset.beta,
        "n_points": dataset.n_points,
        "sigma": dataset.noise_sigma,
        "seed": dataset.seed,
        "model": dataset.model.model_dump() if dataset.model is not None else None,
    }
    frame = pd.DataFrame(
        {
            "n": np.arange(1, dataset.n_points + 1),
            "im_z": dataset.points.imag,
            "re_g": dataset.samples.real,
            "im_g": dataset.samples.imag,
        }
    )
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write("# " + json.dumps(header, sort_keys=True) + "\n")
        frame.to_csv(f, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


def read_dataset(path: PathLike) -> MatsubaraDataset:
    """读取数据集文件并校验头部与正文一致"""
    path = Path(path)
    with open(path, "r", encoding="utf-8") as f:
        first = f.readline()
    if not first.startswith("# "):
        raise FileFormatError(f"{path}: 第一行必须是 '# ' 开头的 JSON 头")
    try:
        header = json.loads(first[2:])
    except json.JSONDecodeError as e:
        raise FileFormatError(f"{path}: JSON 头解析失败: {e}") from e

    frame = pd.read_csv(path, skiprows=1, float_precision="round_trip")
    if list(frame.columns) != DATASET_COLUMNS:
        raise FileFormatError(f"{path}: 列名必须为 {DATASET_COLUMNS}，实际 {list(frame.columns)}")

    beta = float(header["beta"])
    n_points = int(header["n_points"])
    if len(frame) != n_points:
        raise FileFormatError(f"{path}: 头部 N={n_points} 与行数 {len(frame)} 不一致")
    if not np.array_equal(frame["n"].to_numpy(), np.arange(1, n_points + 1)):
        raise FileFormatError(f"{path}: n 列必须为 1..N")
    points = matsubara_points(beta, n_points)
    if not np.array_equal(frame["im_z"].to_numpy(dtype=float), points.imag):
        raise FileFormatError(f"{path}: im_z 列与 β={beta} 的 Matsubara 网格不一致")

    samples = frame["re_g"].to_numpy(dtype=float) + 1j * frame["im_g"].to_numpy(dtype=float)
    model = parse_model(header["model"]) if header.get("model") is not None else None
    return MatsubaraDataset(
        beta=beta,
        n_points=n_points,
        points=points,
        samples=samples,
        noise_sigma=header.get("sigma"),
        seed=header.get("seed"),
        model=model,
    )


# ---------------------------------------------------------------------------
# 结果文件


def _prony_to_dict(prony: Optional[PronyResult]) -> Optional[Dict[str, Any]]:
    if prony is None:
        return None
    return {
        "d_max": prony.d_max,
        "l": prony.l,
        "singular_values": [float(s) for s in prony.singular_values],
        "rank": prony.rank,
        "saturated": prony.saturated,
        "noise_floor": prony.noise_floor,
        "poly_coeffs": _pairs(prony.poly_coeffs),
        "exterior_poles": _pairs(prony.exterior_poles),
        "rejected_roots": _pairs(prony.rejected_roots),
    }


def _prony_from_dict(data: Optional[Dict[str, Any]]) -> Optional[PronyResult]:
    if data is None:
        return None
    return PronyResult(
        d_max=data["d_max"],
        l=data["l"],
        singular_values=np.asarray(data["singular_values"], dtype=float),
        rank=data["rank"],
        saturated=data["saturated"],
        noise_floor=data["noise_floor"],
        poly_coeffs=_from_pairs(data["poly_coeffs"]),
        exterior_poles=_from_pairs(data["exterior_poles"]),
        rejected_roots=_from_pairs(data["rejected_roots"]),
    )


def result_to_dict(recon: Reconstruction, curve_x=None, curve_a=None, curve_eta: Optional[float] = None) -> Dict[str, Any]:
    """结果文件的 JSON 结构（不含耗时，保证同输入同输出）"""
    d = recon.diagnostics
    document = {
        "format": RESULT_FORMAT,
        "version": RESULT_VERSION,
        "reconstruction": {
            "kind": recon.kind,
            "poles": _pairs(recon.poles),
            "weights": _pairs(recon.weights),
            "residual": recon.residual,
            "eta": recon.eta,
            "config": recon.config.model_dump() if recon.config is not None else None,
        },
        "diagnostics": {
            "prony": _prony_to_dict(d.prony),
            "pullback_poles": _pairs(d.pullback_poles),
            "discarded_poles": _pairs(d.discarded_poles),
            "discarded_imag": [float(v) for v in d.discarded_imag],
            "n_interp": d.n_interp,
            "n_samples": d.n_samples,
            "interp_residual": d.interp_residual,
            "kkt_residual": d.kkt_residual,
            "max_violation": d.max_violation,
            "solver_iterations": d.solver_iterations,
            "warnings": list(d.warnings),
        },
        "curve": None,
    }
    if curve_x is not None:
        document["curve"] = {
            "eta": curve_eta,
            "x": [float(v) for v in curve_x],
            "a": [float(v) for v in curve_a],
        }
    return document


def write_result(path: PathLike, recon: Reconstruction, curve_x=None, curve_a=None, curve_eta=None) -> Path:
    """写出结果文件"""
    path = Path(path)
    document = result_to_dict(recon, curve_x, curve_a, curve_eta)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(document, f, indent=2, ensure_ascii=False, allow_nan=False)
        f.write("\n")
    return path


def load_result_document(path: PathLike) -> Dict[str, Any]:
    """读取结果文件的原始 JSON"""
    path = Path(path)
    with open(path, "r", encoding="utf-8") as f:
        try:
            document = json.load(f)
        except json.JSONDecodeError as e:
            raise FileFormatError(f"{path}: JSON 解析失败: {e}") from e
    if document.get("format") != RESULT_FORMAT:
        raise FileFormatError(f"{path}: 不是结果文件（format={document.get('format')!r}）")
    return document


def read_result(path: PathLike) -> Reconstruction:
    """读取结果文件为 Reconstruction（曲线部分忽略）"""
    document = load_result_document(path)
    body = document["reconstruction"]
    diag = document.get("diagnostics") or {}

    poles = _from_pairs(body["poles"])
    weights = _from_pairs(body["weights"])
    if body["kind"] == "molecule":
        poles, weights = poles.real + 0j, weights.real + 0j

    return Reconstruction(
        kind=body["kind"],
        poles=poles,
        weights=weights,
        residual=body["residual"],
        eta=body.get("eta"),
        config=PipelineConfig(**body["config"]) if body.get("config") is not None else None,
        diagnostics=ReconstructionDiagnostics(
            prony=_prony_from_dict(diag.get("prony")),
            pullback_poles=list(_from_pairs(diag.get("pullback_poles", []))),
            discarded_poles=list(_from_pairs(diag.get("discarded_poles", []))),
            discarded_imag=diag.get("discarded_imag", []),
            n_interp=diag.get("n_interp"),
            n_samples=diag.get("n_samples"),
            interp_residual=diag.get("interp_residual"),
            kkt_residual=diag.get("kkt_residual"),
            max_violation=diag.get("max_violation"),
            solver_iterations=diag.get("solver_iterations"),
            warnings=diag.get("warnings", []),
        ),
    )


# ---------------------------------------------------------------------------
# 谱曲线文件


def write_curve(path: PathLike, x, values) -> Path:
    """两列 CSV：x, a"""
    path = Path(path)
    frame = pd.DataFrame({"x": np.asarray(x, dtype=float), "a": np.asarray(values, dtype=float)})
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


def read_curve(path: PathLike) -> pd.DataFrame:
    """读取谱曲线文件"""
    return pd.read_csv(path, float_precision="round_trip")
