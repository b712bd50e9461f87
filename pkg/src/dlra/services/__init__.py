"""基准运行服务"""

from dlra.services.convergence_service import (
    StudyResult,
    ThetaSweep,
    check_norm_compatible,
    rank_floors,
    run_convergence,
    run_norm_drift,
    step_drift_sweep,
    theta_sweep,
)
from dlra.services.lattice_service import LatticeResult, run_lattice
from dlra.services.reference_service import ReferenceCache, reference_solution

__all__ = [
    "LatticeResult",
    "ReferenceCache",
    "StudyResult",
    "ThetaSweep",
    "check_norm_compatible",
    "rank_floors",
    "reference_solution",
    "run_convergence",
    "run_lattice",
    "run_norm_drift",
    "step_drift_sweep",
    "theta_sweep",
]
