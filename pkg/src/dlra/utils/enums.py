"""
枚举类型定义
"""

from enum import Enum


class IntegratorVariant(str, Enum):
    """积分器类型枚举"""

    PARALLEL1 = "parallel1"
    PARALLEL2_V1 = "parallel2_v1"
    PARALLEL2_V2 = "parallel2_v2"
    AUGMENTED_BUG = "augmented_bug"

    @property
    def stage_count(self) -> int:
        """每个宏步中顺序执行的子步阶段数"""
        return 2 if self is IntegratorVariant.AUGMENTED_BUG else 1

    @property
    def is_second_order(self) -> bool:
        return self in (IntegratorVariant.PARALLEL2_V1, IntegratorVariant.PARALLEL2_V2)


class TruncationMode(str, Enum):
    """截断模式"""

    TOLERANCE = "tolerance"
    FIXED_RANK = "fixed_rank"


class SolverMethod(str, Enum):
    """子步 ODE 求解方法"""

    HEUN = "heun"
    RK4 = "rk4"
    EMBEDDED45 = "embedded45"


class ScalarField(str, Enum):
    """标量域"""

    REAL = "real"
    COMPLEX = "complex"


class SingularValueLaw(str, Enum):
    """随机低秩初值的奇异值分布"""

    DECADE = "decade"  # diag(10^-i)
    HALVING = "halving"  # diag(2^-i)
    UNIT = "unit"


class ProblemKind(str, Enum):
    """基准问题类型"""

    SCHRODINGER = "schrodinger"
    LATTICE = "lattice"
    SYNTHETIC = "synthetic"
    FILE = "file"


class SyntheticKind(str, Enum):
    """带闭式解的标定问题"""

    SCALAR_EXPONENTIAL = "scalar_exponential"
    TWO_SIDED = "two_sided"
    SKEW = "skew"


class RejectionStrategy(str, Enum):
    """拒步后的重试策略"""

    HALVE_STEP = "halve_step"
    RAISE_RANK = "raise_rank"


class PlotKind(str, Enum):
    """绘图类型"""

    CONVERGENCE = "convergence"
    NORM_DRIFT = "norm_drift"
    FLUX = "flux"
