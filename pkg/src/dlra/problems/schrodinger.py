"""
离散 Schrödinger 方程

  dY/dt = -i H[Y],  H[Y] = -1/2 (D Y + Y D^T) + V Y V
  D = tridiag(-1, 2, -1) + e_1 e_n^T + e_n e_1^T
  V = diag(1 - cos(2 pi j / n)), j = -n/2, ..., n/2 - 1

H 是 Hermite 超算子，因此 Re<Y, F(Y)> = 0，流保持 Frobenius 范数。
"""

import logging

import numpy as np
import scipy.sparse as sp

from dlra.core.lowrank import make_state, random_orthonormal, singular_value_profile
from dlra.exceptions import InputError
from dlra.model.lowrank_state import LowRankState
from dlra.rhs.sum_factor import SumFactorRhs, SumFactorTerm
from dlra.utils.enums import ScalarField, SingularValueLaw

logger = logging.getLogger(__name__)


def _check_n(n: int) -> None:
    if n < 2 or n % 2 != 0:
        raise InputError(f"Schrödinger 网格数 n 必须为正偶数，当前: {n}")


def second_difference(n: int) -> sp.csr_matrix:
    """tridiag(-1, 2, -1) 加两个角元，共 3n 个非零元"""
    off = -np.ones(n - 1)
    D = sp.diags([off, 2.0 * np.ones(n), off], [-1, 0, 1], shape=(n, n), format="lil")
    D[0, n - 1] = 1.0
    D[n - 1, 0] = 1.0
    return sp.csr_matrix(D)


def cosine_potential(n: int) -> sp.csr_matrix:
    j = np.arange(-n // 2, n // 2)
    return sp.csr_matrix(sp.diags(1.0 - np.cos(2.0 * np.pi * j / n)))


def schrodinger_build(n: int) -> SumFactorRhs:
    """
    组装 F(Y) = -i H[Y] 的和式分解形式

    三项: (i/2 D, I), (I, i/2 D^T), (-i V, V)

    Args:
        n: 网格数（偶数）

    Returns:
        SumFactorRhs: 复数右端项
    """
    _check_n(n)
    D = second_difference(n)
    V = cosine_potential(n)
    eye = sp.identity(n, format="csr", dtype=complex)
    terms = [
        SumFactorTerm(C=0.5j * D, D=eye, label="kinetic_left"),
        SumFactorTerm(C=eye, D=0.5j * D.T, label="kinetic_right"),
        SumFactorTerm(C=-1j * V, D=V.astype(complex), label="potential"),
    ]
    return SumFactorRhs(terms, field=ScalarField.COMPLEX)


def _initial_factors(n: int, seed: int):
    _check_n(n)
    rng = np.random.default_rng(seed)
    U = random_orthonormal(n, n, rng)
    V = random_orthonormal(n, n, rng)
    return U, singular_value_profile(n, SingularValueLaw.DECADE), V


def schrodinger_full_initial(n: int, seed: int) -> np.ndarray:
    """满秩初值 A0 = U diag(10^-i) V^T，U / V 为种子化随机正交矩阵"""
    U, sigma, V = _initial_factors(n, seed)
    return (U * sigma) @ V.T


def schrodinger_initial(n: int, r: int, seed: int) -> LowRankState:
    """
    截断到秩 r 的初值

    奇异值已降序排列，截断即取前 r 列；丢弃质量为 (sum_{i>r} 10^{-2i})^{1/2}。
    """
    U, sigma, V = _initial_factors(n, seed)
    if not 1 <= r <= n:
        raise InputError(f"秩 r 必须满足 1 <= r <= n，当前 r={r}, n={n}")
    return make_state(U[:, :r], np.diag(sigma[:r]), V[:, :r])
