"""右端项模型"""

from dlra.rhs.base import CallableRhs, MatrixOde, ZeroRhs, norm_compatibility_defect
from dlra.rhs.cost import cost_estimate
from dlra.rhs.sum_factor import (
    MacCounter,
    ProjectedFactors,
    SourcePair,
    SumFactorRhs,
    SumFactorTerm,
    basis_fingerprint,
)

__all__ = [
    "CallableRhs",
    "MacCounter",
    "MatrixOde",
    "ProjectedFactors",
    "SourcePair",
    "SumFactorRhs",
    "SumFactorTerm",
    "ZeroRhs",
    "basis_fingerprint",
    "cost_estimate",
    "norm_compatibility_defect",
]
