"""BUG 积分器与多步驱动"""

from dlra.integrators.driver import Trajectory, evolve, step_times
from dlra.integrators.executor import SubstepExecutor
from dlra.integrators.steps import (
    STEP_FUNCTIONS,
    rejection_estimate,
    step,
    step_augmented_bug,
    step_parallel1,
    step_parallel2_v1,
    step_parallel2_v2,
)

__all__ = [
    "STEP_FUNCTIONS",
    "SubstepExecutor",
    "Trajectory",
    "evolve",
    "rejection_estimate",
    "step",
    "step_augmented_bug",
    "step_parallel1",
    "step_parallel2_v1",
    "step_parallel2_v2",
    "step_times",
]
