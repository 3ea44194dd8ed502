"""
配置管理模块
统一管理日志环境配置与数值流水线参数
"""

from pathlib import Path
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """应用配置类（仅影响日志输出，不影响任何数值结果）"""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_prefix="ACONT_",
        case_sensitive=False,
        extra="ignore",
    )

    # 路径配置
    project_root: Path = Path(__file__).parent.parent
    log_dir: Optional[Path] = Field(None, description="日志目录，设置后启用文件日志")

    # 日志配置
    log_level: str = Field("INFO", description="控制台日志级别")
    log_colorize: bool = Field(True, description="控制台是否彩色输出")


class PipelineConfig(BaseModel):
    """
    流水线参数表

    每个字段对应命令行的一个参数（字段名中的下划线换成连字符），
    None 表示按数据集自动推导默认值。
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    # 插值阶段
    epsilon: Optional[float] = Field(None, gt=0, description="分子情形的能隙先验 ε")
    n_interp: Optional[int] = Field(None, ge=2, description="极点基数目 N_I（偶数）")
    svd_cutoff: float = Field(1e-8, gt=0, lt=1, description="伪逆相对奇异值截断")
    reflect_samples: bool = Field(True, description="是否加入共轭镜像点 z̄_n")
    spline_order: int = Field(5, ge=1, le=9, description="倒数样条次数")
    spline_deflate: bool = Field(True, description="样条前是否先扣除全局倒数基拟合")

    # Prony 阶段
    d_max: int = Field(10, ge=1, description="极点数上界")
    l: int = Field(10, ge=1, description="Hankel 矩阵行数")
    n_samples: Optional[int] = Field(None, ge=2, description="圆周采样数 N_s（偶数）")
    noise_floor: Optional[float] = Field(None, gt=0, lt=1, description="秩判定阈值 s_{d+1}/s_1")
    tol_interior: float = Field(1e-3, gt=0, description="|t|>1+tol 的外部极点判定容差")

    # 权重拟合阶段
    lower_half_cutoff: float = Field(1e-6, gt=0, description="凝聚态极点 Im ξ 上限（取负）")
    eta: float = Field(0.01, gt=0, description="谱函数展宽 η")
    grid_x_min: Optional[float] = Field(None, description="约束网格左端点")
    grid_x_max: Optional[float] = Field(None, description="约束网格右端点")
    grid_count: Optional[int] = Field(None, ge=2, description="约束网格点数")
    feas_tol: float = Field(1e-8, gt=0, description="约束可行性容差")
    stat_tol: float = Field(1e-8, gt=0, description="目标平稳性/KKT 容差")
    max_iter: int = Field(100_000, ge=1, description="求解器迭代上限")
    prune_ratio: float = Field(1e-8, ge=0, lt=1, description="分子情形伪极点剪枝比例")

    @model_validator(mode="after")
    def _check_consistency(self) -> "PipelineConfig":
        if self.l < self.d_max:
            raise ValueError(f"l={self.l} 必须不小于 d_max={self.d_max}")
        if self.n_interp is not None and self.n_interp % 2:
            raise ValueError(f"n_interp={self.n_interp} 必须为偶数")
        if self.n_samples is not None:
            if self.n_samples % 2:
                raise ValueError(f"n_samples={self.n_samples} 必须为偶数")
            # 秩饱和时需要 Ĝ_1..Ĝ_{d_max+l}
            if self.n_samples < 2 * (self.d_max + self.l + 1):
                raise ValueError(
                    f"n_samples={self.n_samples} 必须不小于 2(d_max+l+1)={2 * (self.d_max + self.l + 1)}"
                )
        if (
            self.grid_x_min is not None
            and self.grid_x_max is not None
            and self.grid_x_max <= self.grid_x_min
        ):
            raise ValueError("grid_x_max 必须大于 grid_x_min")
        return self

    def with_overrides(self, **overrides) -> "PipelineConfig":
        """返回覆盖部分字段后的新配置（None 值忽略）"""
        data = self.model_dump()
        data.update({k: v for k, v in overrides.items() if v is not None})
        return PipelineConfig(**data)


# 全局配置实例
settings = Settings()
