"""
矩阵 ODE 右端项抽象

MatrixOde 给出 F(t, Y) 及 BUG 子步需要的三种投影形式:
  eval_K(t, K, V) = F(t, K V^H) V
  eval_L(t, L, U) = F(t, U L^H)^H U
  eval_S(t, S, U, V) = U^H F(t, U S V^H) V
默认实现走稠密路径；结构化右端项（SumFactorRhs）覆盖为快速路径。
"""

import logging
from abc import ABC, abstractmethod
from typing import Any, Callable, Optional

import numpy as np

from dlra.exceptions import InputError, NumericalError, ShapeMismatchError
from dlra.utils.enums import ScalarField

logger = logging.getLogger(__name__)


def check_finite(X: np.ndarray, where: str) -> np.ndarray:
    if not np.all(np.isfinite(X)):
        raise NumericalError(f"右端项输出包含非有限值: {where}", detail={"where": where})
    return X


class MatrixOde(ABC):
    """
    矩阵 ODE  dY/dt = F(t, Y), Y 为 m x n

    实现必须可重入：K/L/S 三个子步可能在不同线程中同时调用 eval_*。
    """

    def __init__(self, m: int, n: int, field: ScalarField = ScalarField.REAL):
        if m < 1 or n < 1:
            raise InputError(f"问题维度非法: m={m}, n={n}")
        self.m = m
        self.n = n
        self.field = field

    @property
    def shape(self) -> tuple[int, int]:
        return self.m, self.n

    @property
    def dtype(self) -> type:
        return np.complex128 if self.field is ScalarField.COMPLEX else np.float64

    @property
    def supports_projection_cache(self) -> bool:
        """是否支持每步一次的投影因子预计算"""
        return False

    def precompute_projected_factors(
        self, U_hat: Optional[np.ndarray], V_hat: Optional[np.ndarray]
    ) -> Any:
        """默认实现不缓存，返回 None；各 eval_* 接受 cache=None"""
        return None

    def source_norm(self) -> float:
        """常数源项的 Frobenius 范数（无源项时为 0）"""
        return 0.0

    @abstractmethod
    def _apply(self, t: float, Y: np.ndarray) -> np.ndarray:
        """计算 F(t, Y)，形状检查由 eval_full 负责"""

    def _check_shape(self, X: np.ndarray, rows: int, name: str) -> None:
        if X.ndim != 2 or X.shape[0] != rows:
            raise ShapeMismatchError(f"{name} 行数应为 {rows}，当前形状: {X.shape}")

    def eval_full(self, t: float, Y: np.ndarray) -> np.ndarray:
        Y = np.asarray(Y)
        if Y.shape != self.shape:
            raise ShapeMismatchError(f"Y 形状 {Y.shape} 与问题维度 {self.shape} 不一致")
        return check_finite(self._apply(t, Y), "eval_full")

    def eval_K(
        self, t: float, K: np.ndarray, V_hat: np.ndarray, cache: Any = None, counter: Any = None
    ) -> np.ndarray:
        self._check_shape(K, self.m, "K")
        self._check_shape(V_hat, self.n, "V_hat")
        if K.shape[1] != V_hat.shape[1]:
            raise ShapeMismatchError(f"K {K.shape} 与 V_hat {V_hat.shape} 列数不一致")
        Y = K @ V_hat.conj().T
        return check_finite(self._apply(t, Y) @ V_hat, "eval_K")

    def eval_L(
        self, t: float, L: np.ndarray, U_hat: np.ndarray, cache: Any = None, counter: Any = None
    ) -> np.ndarray:
        self._check_shape(L, self.n, "L")
        self._check_shape(U_hat, self.m, "U_hat")
        if L.shape[1] != U_hat.shape[1]:
            raise ShapeMismatchError(f"L {L.shape} 与 U_hat {U_hat.shape} 列数不一致")
        Y = U_hat @ L.conj().T
        return check_finite(self._apply(t, Y).conj().T @ U_hat, "eval_L")

    def eval_S(
        self,
        t: float,
        S: np.ndarray,
        U_hat: np.ndarray,
        V_hat: np.ndarray,
        cache: Any = None,
        counter: Any = None,
    ) -> np.ndarray:
        self._check_shape(U_hat, self.m, "U_hat")
        self._check_shape(V_hat, self.n, "V_hat")
        if S.shape != (U_hat.shape[1], V_hat.shape[1]):
            raise ShapeMismatchError(
                f"S {S.shape} 与基宽度 ({U_hat.shape[1]}, {V_hat.shape[1]}) 不一致"
            )
        Y = U_hat @ S @ V_hat.conj().T
        return check_finite(U_hat.conj().T @ self._apply(t, Y) @ V_hat, "eval_S")

    def __call__(self, t: float, Y: np.ndarray) -> np.ndarray:
        return self.eval_full(t, Y)


class ZeroRhs(MatrixOde):
    """F ≡ 0"""

    def _apply(self, t: float, Y: np.ndarray) -> np.ndarray:
        return np.zeros_like(Y)


class CallableRhs(MatrixOde):
    """由稠密回调 func(t, Y) 定义的右端项，投影形式全部走稠密路径"""

    def __init__(
        self,
        m: int,
        n: int,
        func: Callable[[float, np.ndarray], np.ndarray],
        field: ScalarField = ScalarField.REAL,
    ):
        super().__init__(m, n, field)
        self._func = func

    def _apply(self, t: float, Y: np.ndarray) -> np.ndarray:
        return np.asarray(self._func(t, Y))


def norm_compatibility_defect(
    rhs: MatrixOde, n_probes: int = 20, seed: int = 0, t: float = 0.0
) -> float:
    """
    随机探测 max |Re<Z, F(t, Z)>| / ||Z||^2

    复数问题使用复高斯探针。结果接近 0 说明 F 与 Frobenius 范数相容。
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_probes):
        Z = rng.standard_normal(rhs.shape)
        if rhs.field is ScalarField.COMPLEX:
            Z = Z + 1j * rng.standard_normal(rhs.shape)
        value = np.vdot(Z, rhs.eval_full(t, Z)).real
        worst = max(worst, abs(value) / float(np.vdot(Z, Z).real))
    logger.debug("范数相容性探测: %d 个探针, 最大相对缺陷 %.3e", n_probes, worst)
    return worst
