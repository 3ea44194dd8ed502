"""
数据模型定义
定义系统中使用的所有数据结构
"""

from typing import Annotated, Dict, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .config import PipelineConfig


def matsubara_points(beta: float, n_points: int) -> np.ndarray:
    """Matsubara 点 z_n = (2n-1)πi/β，n = 1..N（唯一的公式来源）"""
    n = np.arange(1, n_points + 1, dtype=float)
    return 1j * ((2.0 * n - 1.0) * np.pi / beta)


def _frozen_array(values, dtype) -> np.ndarray:
    array = np.array(values, dtype=dtype).reshape(-1)
    array.setflags(write=False)
    return array


# ---------------------------------------------------------------------------
# 谱模型（带标签的联合类型）
# ---------------------------------------------------------------------------

class DeltaAtom(BaseModel):
    """离散谱的一个 δ 原子"""
    location: float = Field(..., description="位置 ξ_j")
    weight: float = Field(..., gt=0.0, description="权重 A_j")


class DeltaModel(BaseModel):
    """分子情形：A(x) = Σ_j A_j δ(x - ξ_j)"""
    model_config = ConfigDict(frozen=True)

    kind: Literal["delta"] = "delta"
    atoms: List[DeltaAtom] = Field(..., min_length=1)

    @field_validator("atoms")
    @classmethod
    def _check_atoms(cls, atoms: List[DeltaAtom]) -> List[DeltaAtom]:
        locations = [atom.location for atom in atoms]
        if any(x == 0.0 for x in locations):
            raise ValueError("δ 原子位置不能为 0（需要能隙 ε > 0）")
        if len(set(locations)) != len(locations):
            raise ValueError("δ 原子位置必须两两不同")
        return atoms

    @property
    def locations(self) -> np.ndarray:
        return np.array([atom.location for atom in self.atoms], dtype=float)

    @property
    def weights(self) -> np.ndarray:
        return np.array([atom.weight for atom in self.atoms], dtype=float)

    @property
    def gap(self) -> float:
        """能隙 ε = min |ξ_j|"""
        return float(np.min(np.abs(self.locations)))


class QuasiParticle(BaseModel):
    """准粒子极点，位置与权重以 (实部, 虚部) 给出"""
    location: Tuple[float, float] = Field(..., description="ξ_j = (Re, Im)，Im < 0")
    weight: Tuple[float, float] = Field(..., description="A_j = (Re, Im)")

    @field_validator("location")
    @classmethod
    def _lower_half(cls, location: Tuple[float, float]) -> Tuple[float, float]:
        if not location[1] < 0.0:
            raise ValueError(f"准粒子极点必须位于开下半平面: {location}")
        return location


class PoleModel(BaseModel):
    """凝聚态情形：G(z) = (1/2π) Σ_j A_j / (z - ξ_j)，Im ξ_j < 0"""
    model_config = ConfigDict(frozen=True)

    kind: Literal["poles"] = "poles"
    poles: List[QuasiParticle] = Field(..., min_length=1)

    @field_validator("poles")
    @classmethod
    def _distinct(cls, poles: List[QuasiParticle]) -> List[QuasiParticle]:
        locations = [p.location for p in poles]
        if len(set(locations)) != len(locations):
            raise ValueError("准粒子极点必须两两不同")
        return poles

    @property
    def locations(self) -> np.ndarray:
        return np.array([complex(*p.location) for p in self.poles], dtype=complex)

    @property
    def weights(self) -> np.ndarray:
        return np.array([complex(*p.weight) for p in self.poles], dtype=complex)


class GaussianComponent(BaseModel):
    """高斯分量：mass · N(x; center, variance)"""
    center: float
    variance: float = Field(..., gt=0.0)
    mass: float = Field(..., gt=0.0)


class GaussianMixture(BaseModel):
    """连续谱测试模型（准粒子先验不成立）"""
    model_config = ConfigDict(frozen=True)

    kind: Literal["gaussian"] = "gaussian"
    components: List[GaussianComponent] = Field(..., min_length=1)


SpectralModel = Annotated[
    Union[DeltaModel, PoleModel, GaussianMixture], Field(discriminator="kind")
]


# ---------------------------------------------------------------------------
# 数据集
# ---------------------------------------------------------------------------

class MatsubaraDataset(BaseModel):
    """Matsubara 网格上的（含噪）格林函数样本"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    beta: float = Field(..., gt=0.0, description="逆温度 β")
    n_points: int = Field(..., ge=1, description="Matsubara 点数 N")
    points: np.ndarray = Field(..., description="z_n")
    samples: np.ndarray = Field(..., description="G(z_n)")
    noise_sigma: Optional[float] = Field(None, ge=0.0, description="相对噪声水平 σ")
    seed: Optional[int] = Field(None, description="噪声随机种子")
    model: Optional[SpectralModel] = Field(None, description="生成数据的真实谱模型")

    @field_validator("points", "samples", mode="before")
    @classmethod
    def _to_array(cls, values) -> np.ndarray:
        return _frozen_array(values, complex)

    @model_validator(mode="after")
    def _check_grid(self) -> "MatsubaraDataset":
        if len(self.points) != self.n_points or len(self.samples) != self.n_points:
            raise ValueError(
                f"点数不一致: N={self.n_points}, |points|={len(self.points)}, |samples|={len(self.samples)}"
            )
        expected = matsubara_points(self.beta, self.n_points)
        if not np.array_equal(self.points, expected):
            raise ValueError("points 必须严格等于 (2n-1)πi/β")
        return self

    @property
    def a(self) -> float:
        """区间下端 π/β"""
        return float(np.pi / self.beta)

    @property
    def b(self) -> float:
        """区间上端 (2N-1)π/β"""
        return float((2 * self.n_points - 1) * np.pi / self.beta)

    def with_samples(self, samples, noise_sigma: Optional[float], seed: Optional[int]) -> "MatsubaraDataset":
        """替换样本，保留网格与模型元数据"""
        return MatsubaraDataset(
            beta=self.beta,
            n_points=self.n_points,
            points=self.points,
            samples=samples,
            noise_sigma=noise_sigma,
            seed=seed,
            model=self.model,
        )


# ---------------------------------------------------------------------------
# Prony 与重建结果
# ---------------------------------------------------------------------------

class FourierCoefficients(BaseModel):
    """圆周采样的 Fourier 系数 Ĝ_k，k = -N_s/2 .. N_s/2-1"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    n_samples: int = Field(..., ge=2)
    values: np.ndarray = Field(..., description="按 k 递增排列")

    @field_validator("values", mode="before")
    @classmethod
    def _to_array(cls, values) -> np.ndarray:
        return _frozen_array(values, complex)

    @model_validator(mode="after")
    def _check_length(self) -> "FourierCoefficients":
        if len(self.values) != self.n_samples:
            raise ValueError("Fourier 系数个数必须等于 N_s")
        return self

    @property
    def k_min(self) -> int:
        return -(self.n_samples // 2)

    @property
    def k_max(self) -> int:
        return self.n_samples // 2 - 1

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.k_min, self.k_max + 1)

    def get(self, k: int) -> complex:
        """取单个系数 Ĝ_k"""
        if not self.k_min <= k <= self.k_max:
            raise IndexError(f"k={k} 超出 [{self.k_min}, {self.k_max}]")
        return complex(self.values[k - self.k_min])

    def span(self, k_first: int, k_last: int) -> np.ndarray:
        """取连续区间 Ĝ_{k_first..k_last}"""
        if k_first < self.k_min or k_last > self.k_max:
            raise IndexError(f"[{k_first}, {k_last}] 超出 [{self.k_min}, {self.k_max}]")
        return self.values[k_first - self.k_min:k_last - self.k_min + 1]


class PronyResult(BaseModel):
    """Prony 方法的输出与诊断信息"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    d_max: int
    l: int
    singular_values: np.ndarray
    rank: int = Field(..., ge=0, description="检测到的极点数 d")
    saturated: bool = Field(False, description="奇异值无间隙，d 取到上界")
    noise_floor: float
    poly_coeffs: np.ndarray = Field(..., description="p_0..p_d")
    exterior_poles: np.ndarray = Field(..., description="|t_j| > 1 + tol 的极点")
    rejected_roots: np.ndarray = Field(..., description="未通过外部判定的 t")

    @field_validator("singular_values", mode="before")
    @classmethod
    def _real(cls, values) -> np.ndarray:
        return _frozen_array(values, float)

    @field_validator("poly_coeffs", "exterior_poles", "rejected_roots", mode="before")
    @classmethod
    def _complex(cls, values) -> np.ndarray:
        return _frozen_array(values, complex)


class ReconstructionDiagnostics(BaseModel):
    """流水线诊断信息"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    prony: Optional[PronyResult] = None
    pullback_poles: List[complex] = Field(default_factory=list, description="拉回得到的全部 ξ_j")
    discarded_poles: List[complex] = Field(default_factory=list, description="被过滤的 ξ_j")
    discarded_imag: List[float] = Field(default_factory=list, description="实轴投影丢弃的虚部")
    n_interp: Optional[int] = None
    n_samples: Optional[int] = None
    interp_residual: Optional[float] = None
    kkt_residual: Optional[float] = None
    max_violation: Optional[float] = None
    solver_iterations: Optional[int] = None
    stage_times: Dict[str, float] = Field(default_factory=dict)
    warnings: List[str] = Field(default_factory=list)


class Reconstruction(BaseModel):
    """重建结果：极点、权重与残差"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    kind: Literal["molecule", "condensed"]
    poles: np.ndarray = Field(..., description="ξ_j")
    weights: np.ndarray = Field(..., description="A_j")
    residual: float = Field(..., ge=0.0, description="目标函数值")
    eta: Optional[float] = Field(None, gt=0.0)
    config: Optional[PipelineConfig] = None
    diagnostics: ReconstructionDiagnostics = Field(default_factory=ReconstructionDiagnostics)

    @field_validator("poles", "weights", mode="before")
    @classmethod
    def _to_array(cls, values) -> np.ndarray:
        return _frozen_array(values, complex)

    @model_validator(mode="after")
    def _check_shapes(self) -> "Reconstruction":
        if len(self.poles) != len(self.weights):
            raise ValueError("极点与权重个数必须相同")
        if self.kind == "molecule":
            if np.any(self.poles.imag != 0.0) or np.any(self.weights.imag != 0.0):
                raise ValueError("分子情形的极点与权重必须为实数")
            if np.any(self.weights.real < 0.0):
                raise ValueError("分子情形的权重必须非负")
        return self

    @property
    def n_poles(self) -> int:
        return len(self.poles)
