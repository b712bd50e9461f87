"""
运行记录相关数据模型
"""

from typing import Dict, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from dlra.model.lowrank_state import LowRankState
from dlra.utils.enums import SolverMethod


class SubstepStats(BaseModel):
    """单次子步积分统计"""

    method: SolverMethod
    n_steps: int = 0
    n_rejected: int = 0
    n_rhs_evals: int = 0
    wall_time: float = 0.0


class StepInternals(BaseModel):
    """
    单个宏步的中间量（仅在 keep_internals=True 时保存）

    U_hat0 / V_hat0: 初始增广基（parallel1 与 augmented_bug 中为 U0 / V0）
    U_hat1 / V_hat1: 截断前的增广基
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    U_hat0: np.ndarray
    V_hat0: np.ndarray
    U_hat1: np.ndarray
    V_hat1: np.ndarray
    K1: np.ndarray
    L1: np.ndarray
    S_hat1: np.ndarray
    FV0: Optional[np.ndarray] = None
    retained_shape: Tuple[int, int] = Field(..., description="S_hat1 左上块形状")


class StepResult(BaseModel):
    """单个宏步的结果"""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    state: LowRankState
    r_hat: int = Field(..., description="截断前的增广宽度")
    discarded: float = Field(..., ge=0.0, description="截断丢弃的奇异值质量")
    eta: float = Field(..., ge=0.0, description="拒步估计 ||U~^H F(Y0) V~||")
    stage_count: int = Field(..., ge=1)
    substep_stats: Dict[str, SubstepStats] = Field(default_factory=dict)
    internals: Optional[StepInternals] = None
    rejections: int = 0


class RunRecord(BaseModel):
    """逐步诊断记录"""

    step: int = Field(..., ge=0)
    time: float
    h: float
    rank: int = Field(..., ge=1)
    norm: float = Field(..., ge=0.0)
    eta: float = Field(default=0.0, ge=0.0)
    discarded: float = Field(default=0.0, ge=0.0)
    wall_time: float = Field(default=0.0, ge=0.0, description="累计墙钟时间（秒）")
    stage_count: int = 0
    rejections: int = 0
    wall_K: float = 0.0
    wall_L: float = 0.0
    wall_S: float = 0.0


class CostReport(BaseModel):
    """按乘加（multiply-accumulate）计数的算量报告"""

    model_config = ConfigDict(frozen=True)

    c_aug_K: int
    c_aug_L: int
    c_ode_K: int
    c_ode_L: int
    c_ode_S: int
    n_ode: int

    @property
    def total(self) -> int:
        return self.c_aug_K + self.c_aug_L + self.c_ode_K + self.c_ode_L + self.c_ode_S
