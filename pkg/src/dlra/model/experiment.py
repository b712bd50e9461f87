"""
基准实验配置模型
"""

from pathlib import Path
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

from dlra.model.lowrank_state import TruncationPolicy
from dlra.model.solver_config import SolverConfig
from dlra.utils.enums import (
    IntegratorVariant,
    ProblemKind,
    RejectionStrategy,
    SingularValueLaw,
    SyntheticKind,
)


class ProblemSpec(BaseModel):
    """问题标识与参数"""

    kind: ProblemKind = ProblemKind.SCHRODINGER
    n: int = Field(default=100, ge=2, description="Schrödinger 网格数 / 合成问题列数")
    m: int = Field(default=20, ge=1, description="合成问题行数")
    synthetic_kind: SyntheticKind = SyntheticKind.SKEW
    exact_rank: int = Field(default=5, ge=1, description="合成问题初值秩")
    law: SingularValueLaw = SingularValueLaw.DECADE
    n_xy: int = Field(default=70, ge=7, description="lattice 每方向网格数")
    moment_order: int = Field(default=9, ge=1, description="P_N 阶数 N")
    cfl: float = Field(default=0.5, gt=0.0)
    path: Optional[Path] = Field(default=None, description="问题定义文件（kind=file）")
    overrides: Optional[Path] = Field(default=None, description="lattice 截面覆盖文件")

    @property
    def key(self) -> str:
        """用于缓存哈希的稳定标识"""
        return self.model_dump_json()


class HGrid(BaseModel):
    """几何步长网格（严格递减）"""

    start: float = Field(default=1e-1, gt=0.0)
    stop: float = Field(default=1e-3, gt=0.0)
    points: int = Field(default=8, ge=1)
    values: Optional[List[float]] = Field(default=None, description="显式步长列表，优先于几何网格")

    @model_validator(mode="after")
    def _check_decreasing(self):
        hs = self.as_list()
        if any(h <= 0 for h in hs):
            raise ValueError("步长必须为正")
        if any(b >= a for a, b in zip(hs, hs[1:])):
            raise ValueError(f"步长网格必须严格递减: {hs}")
        return self

    def as_list(self) -> List[float]:
        if self.values is not None:
            return [float(h) for h in self.values]
        if self.points == 1:
            return [float(self.start)]
        return [float(h) for h in np.geomspace(self.start, self.stop, self.points)]


class ReferenceConfig(BaseModel):
    """参考解配置"""

    rtol: float = Field(default=1e-10, gt=0.0)
    atol: float = Field(default=1e-10, gt=0.0)
    max_steps: int = Field(default=1_000_000, ge=1)
    cache_dir: Path = Path(".dlra_cache")
    use_cache: bool = True


class RejectionConfig(BaseModel):
    """拒步策略（默认关闭）"""

    enabled: bool = False
    reject_tol: float = Field(default=1e-3, gt=0.0)
    max_retries: int = Field(default=3, ge=1)
    strategy: RejectionStrategy = RejectionStrategy.HALVE_STEP


class ExperimentConfig(BaseModel):
    """
    单个子命令的实验配置

    说明:
      - truncation 为模板，按 ranks 中每个秩实例化
      - h_grid 用于 convergence / norm-drift；lattice 使用 problem.cfl 决定步长
      - theta_sweep 非空时 norm-drift 额外做单步 theta 扫描（步长 theta_step）
    """

    problem: ProblemSpec = Field(default_factory=ProblemSpec)
    variants: List[IntegratorVariant] = Field(
        default_factory=lambda: [
            IntegratorVariant.PARALLEL1,
            IntegratorVariant.PARALLEL2_V1,
            IntegratorVariant.PARALLEL2_V2,
        ]
    )
    ranks: List[int] = Field(default_factory=lambda: [5, 10, 15])
    h_grid: HGrid = Field(default_factory=HGrid)
    T: float = Field(default=1.0, gt=0.0)
    truncation: TruncationPolicy = Field(
        default_factory=lambda: TruncationPolicy.fixed(1)
    )
    solver: SolverConfig = Field(default_factory=SolverConfig)
    reference: ReferenceConfig = Field(default_factory=ReferenceConfig)
    rejection: RejectionConfig = Field(default_factory=RejectionConfig)
    seed: int = Field(default=0, ge=0)
    seeds: List[int] = Field(default_factory=list, description="可选的种子扫描")
    output_dir: Path = Path("results")
    threads: int = Field(default=1, ge=1)
    theta_sweep: List[float] = Field(default_factory=list)
    theta_step: float = Field(default=1e-4, gt=0.0)

    @field_validator("ranks")
    @classmethod
    def _ranks_positive(cls, v):
        if not v or any(r < 1 for r in v):
            raise ValueError(f"ranks 必须为非空正整数列表，当前: {v}")
        return v

    @field_validator("variants")
    @classmethod
    def _variants_nonempty(cls, v):
        if not v:
            raise ValueError("variants 不能为空")
        return v
