"""
带闭式解的标定问题

  scalar_exponential  F(Y) = a Y                  Y(t) = e^{a t} Y0
  two_sided           F(Y) = A Y + Y B           Y(t) = e^{A t} Y0 e^{B t}
  skew                F(Y) = A_l Y - Y A_r       Y(t) = e^{A_l t} Y0 e^{-A_r t}

two_sided 中 A、B 为对称矩阵（正规），skew 中 A_l、A_r 为反对称矩阵，流保持范数。
初值秩为 r 且奇异值按 10^-i 衰减。
"""

from typing import Callable, NamedTuple

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp

from dlra.core.lowrank import random_lowrank
from dlra.exceptions import InputError
from dlra.model.lowrank_state import LowRankState
from dlra.rhs.sum_factor import SumFactorRhs, SumFactorTerm
from dlra.utils.enums import SingularValueLaw, SyntheticKind


class SyntheticProblem(NamedTuple):
    rhs: SumFactorRhs
    initial: LowRankState
    exact: Callable[[float], np.ndarray]


def _random_skew(k: int, rng: np.random.Generator) -> np.ndarray:
    W = rng.uniform(-1.0, 1.0, size=(k, k))
    return 0.5 * (W - W.T)


def _random_symmetric(k: int, rng: np.random.Generator, scale: float) -> np.ndarray:
    W = rng.uniform(-1.0, 1.0, size=(k, k))
    return scale * 0.5 * (W + W.T)


def synthetic_exact(
    m: int,
    n: int,
    r: int,
    kind: SyntheticKind,
    seed: int = 0,
    a: float = -1.0,
    law: SingularValueLaw = SingularValueLaw.DECADE,
) -> SyntheticProblem:
    """
    构造标定问题

    Args:
        m, n, r: 维度与初值秩
        kind: 问题类型
        seed: 随机种子
        a: scalar_exponential 的系数
        law: 初值奇异值分布

    Returns:
        SyntheticProblem: (右端项, 初值, 闭式解 t -> Y(t))
    """
    if min(m, n, r) < 1 or r > min(m, n):
        raise InputError(f"维度非法: m={m}, n={n}, r={r}")
    rng = np.random.default_rng(seed)
    Y0 = random_lowrank(m, n, r, seed=seed + 1, singular_value_law=law)
    Y0_dense = Y0.dense()

    if kind is SyntheticKind.SCALAR_EXPONENTIAL:
        terms = [SumFactorTerm(C=a * sp.identity(m), D=sp.identity(n), label="scalar")]

        def exact(t: float) -> np.ndarray:
            return np.exp(a * t) * Y0_dense

    elif kind is SyntheticKind.TWO_SIDED:
        A = _random_symmetric(m, rng, scale=0.5)
        B = _random_symmetric(n, rng, scale=0.5)
        terms = [
            SumFactorTerm(C=A, D=sp.identity(n), label="left"),
            SumFactorTerm(C=sp.identity(m), D=B, label="right"),
        ]

        def exact(t: float) -> np.ndarray:
            return la.expm(t * A) @ Y0_dense @ la.expm(t * B)

    elif kind is SyntheticKind.SKEW:
        A_l = _random_skew(m, rng)
        A_r = _random_skew(n, rng)
        terms = [
            SumFactorTerm(C=A_l, D=sp.identity(n), label="left"),
            SumFactorTerm(C=sp.identity(m), D=-A_r, label="right"),
        ]

        def exact(t: float) -> np.ndarray:
            return la.expm(t * A_l) @ Y0_dense @ la.expm(-t * A_r)

    else:
        raise InputError(f"未知的标定问题类型: {kind}")

    return SyntheticProblem(rhs=SumFactorRhs(terms), initial=Y0, exact=exact)
