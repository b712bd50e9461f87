"""数据模型"""

from dlra.model.experiment import (
    ExperimentConfig,
    HGrid,
    ProblemSpec,
    ReferenceConfig,
    RejectionConfig,
)
from dlra.model.lowrank_state import LowRankState, TruncationPolicy
from dlra.model.records import (
    CostReport,
    RunRecord,
    StepInternals,
    StepResult,
    SubstepStats,
)
from dlra.model.solver_config import SolverConfig

__all__ = [
    "CostReport",
    "ExperimentConfig",
    "HGrid",
    "LowRankState",
    "ProblemSpec",
    "ReferenceConfig",
    "RejectionConfig",
    "RunRecord",
    "SolverConfig",
    "StepInternals",
    "StepResult",
    "SubstepStats",
    "TruncationPolicy",
]
