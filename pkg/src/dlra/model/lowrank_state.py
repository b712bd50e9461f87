"""
低秩状态与截断策略数据模型
"""

from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from dlra.utils.enums import ScalarField, TruncationMode

# 构造时的正交性校验阈值；结果层面的 10^-12 要求由测试在小规模实例上检查
ORTHONORMALITY_CHECK_TOL = 1e-10


def orthonormality_defect(Q: np.ndarray) -> float:
    """||Q^H Q - I||_F"""
    k = Q.shape[1]
    return float(np.linalg.norm(Q.conj().T @ Q - np.eye(k)))


class LowRankState(BaseModel):
    """
    低秩分解 Y = U S V^H

    说明:
      - U: m x r, 列正交
      - S: r x r, 一般非对角
      - V: n x r, 列正交
      - t: 当前时间
    对象构造后不可变，可在线程间只读共享。
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    U: np.ndarray
    S: np.ndarray
    V: np.ndarray
    t: float = 0.0

    @field_validator("U", "S", "V", mode="before")
    @classmethod
    def _as_matrix(cls, v):
        arr = np.asarray(v)
        if arr.ndim != 2:
            raise ValueError(f"因子必须是二维矩阵，当前维数: {arr.ndim}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("因子包含非有限值")
        return arr

    @model_validator(mode="after")
    def _check_factorization(self):
        m, r = self.U.shape
        n, r_v = self.V.shape
        if self.S.shape != (r, r_v) or r != r_v:
            raise ValueError(
                f"因子形状不一致: U {self.U.shape}, S {self.S.shape}, V {self.V.shape}"
            )
        if not 1 <= r <= min(m, n):
            raise ValueError(f"秩 r={r} 不满足 1 <= r <= min(m, n) = {min(m, n)}")
        for name, Q in (("U", self.U), ("V", self.V)):
            defect = orthonormality_defect(Q)
            if defect > ORTHONORMALITY_CHECK_TOL:
                raise ValueError(f"{name} 列不正交, ||Q^H Q - I|| = {defect:.3e}")
        return self

    @property
    def shape(self) -> tuple[int, int]:
        return self.U.shape[0], self.V.shape[0]

    @property
    def rank(self) -> int:
        return self.U.shape[1]

    @property
    def field(self) -> ScalarField:
        if any(np.iscomplexobj(a) for a in (self.U, self.S, self.V)):
            return ScalarField.COMPLEX
        return ScalarField.REAL

    @property
    def dtype(self) -> np.dtype:
        return np.result_type(self.U, self.S, self.V)

    def dense(self) -> np.ndarray:
        """重构稠密矩阵 U S V^H"""
        return self.U @ self.S @ self.V.conj().T

    def norm(self) -> float:
        """||Y||_F = ||S||_F（基正交）"""
        return float(np.linalg.norm(self.S))

    def singular_values(self) -> np.ndarray:
        return np.linalg.svd(self.S, compute_uv=False)


class TruncationPolicy(BaseModel):
    """
    截断策略

    tolerance 模式: 取满足尾部奇异值平方和开方 <= theta 的最小秩，并裁剪到 [r_min, r_max]
    fixed_rank 模式: 取 min(target_rank, r_hat)
    """

    model_config = ConfigDict(frozen=True)

    mode: TruncationMode = TruncationMode.FIXED_RANK
    theta: float = Field(default=0.0, ge=0.0, description="截断容差（Frobenius 单位）")
    target_rank: Optional[int] = Field(default=None, ge=1)
    r_min: int = Field(default=1, ge=1)
    r_max: Optional[int] = Field(default=None, ge=1, description="为空时取 min(m, n)")

    @model_validator(mode="after")
    def _check_bounds(self):
        if self.r_max is not None and self.r_min > self.r_max:
            raise ValueError(f"r_min={self.r_min} 大于 r_max={self.r_max}")
        if self.mode is TruncationMode.FIXED_RANK and self.target_rank is None:
            raise ValueError("fixed_rank 模式需要 target_rank")
        return self

    @classmethod
    def fixed(cls, rank: int) -> "TruncationPolicy":
        return cls(mode=TruncationMode.FIXED_RANK, target_rank=rank)

    @classmethod
    def tolerance(
        cls, theta: float, r_min: int = 1, r_max: Optional[int] = None
    ) -> "TruncationPolicy":
        return cls(mode=TruncationMode.TOLERANCE, theta=theta, r_min=r_min, r_max=r_max)

    def with_rank(self, rank: int) -> "TruncationPolicy":
        """按运行秩实例化：fixed_rank 设置目标秩，tolerance 模式不变"""
        if self.mode is TruncationMode.FIXED_RANK:
            return self.model_copy(update={"target_rank": rank})
        return self

    def raised(self, increment: int) -> "TruncationPolicy":
        """拒步后放宽秩界"""
        if self.mode is TruncationMode.FIXED_RANK:
            return self.model_copy(update={"target_rank": self.target_rank + increment})
        if self.r_max is None:
            return self
        return self.model_copy(update={"r_max": self.r_max + increment})
