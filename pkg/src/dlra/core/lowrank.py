"""
Author: sy.pan
Date: 2026-03-02 14:40:51
LastEditors: sy.pan
LastEditTime: 2026-10-18 16:22:09
FilePath: /dlra_bench/src/dlra/core/lowrank.py
Description:

Copyright (c) 2026 by sy.pan, All Rights Reserved.
"""

"""
低秩核心运算: 正交化、SVD 截断、切空间投影、法向分量与随机低秩初值

所有函数均为纯函数；实数与复数标量域通用，转置统一按共轭转置处理。
"""

import logging
from typing import Tuple

import numpy as np
import scipy.linalg as la
from pydantic import ValidationError

from dlra.exceptions import InputError, NumericalError, PolicyError, ShapeMismatchError
from dlra.model.lowrank_state import LowRankState, TruncationPolicy
from dlra.utils.enums import ScalarField, SingularValueLaw, TruncationMode

logger = logging.getLogger(__name__)


def inner(A: np.ndarray, B: np.ndarray) -> complex:
    """Frobenius 内积 <A, B> = trace(A^H B)"""
    return np.vdot(A, B)


def frob_norm(A: np.ndarray) -> float:
    return float(np.linalg.norm(A))


def make_state(U: np.ndarray, S: np.ndarray, V: np.ndarray, t: float = 0.0) -> LowRankState:
    """构造 LowRankState，校验失败转换为 InputError"""
    try:
        return LowRankState(U=U, S=S, V=V, t=t)
    except ValidationError as e:
        raise InputError("低秩因子不满足不变量", detail={"errors": str(e)})


def orth(M: np.ndarray) -> np.ndarray:
    """
    Householder QR 正交化，保留全部 k 列

    Args:
        M: m x k 矩阵, k <= m

    Returns:
        np.ndarray: 列正交的 Q (m x k)，range(Q) 包含 range(M)
    """
    M = np.asarray(M)
    if M.ndim != 2:
        raise ShapeMismatchError(f"orth 需要二维矩阵，当前维数: {M.ndim}")
    m, k = M.shape
    if k > m:
        raise InputError(f"orth 要求列数 k <= 行数 m，当前 k={k}, m={m}")
    if not np.all(np.isfinite(M)):
        raise InputError("orth 输入包含非有限值")
    Q, _ = np.linalg.qr(M, mode="reduced")
    return Q


def orth_concat(basis: np.ndarray, directions: np.ndarray) -> np.ndarray:
    """
    orth([basis, directions])，宽度超过 m 时截到 m 列

    Householder QR 的前 k 列张成 basis 的列空间，因此宽度封顶不会丢失 basis 本身。
    """
    stacked = np.hstack([basis, directions])
    if not np.all(np.isfinite(stacked)):
        raise InputError("增广矩阵包含非有限值")
    Q, _ = np.linalg.qr(stacked, mode="reduced")
    return Q


def new_directions(basis: np.ndarray, directions: np.ndarray) -> np.ndarray:
    """
    返回与 basis 正交的新增方向块 Q[:, k:]，其中 Q = orth([basis, directions])

    宽度为 min(directions 列数, m - k)；满秩时返回 m x 0 的空块。
    """
    k = basis.shape[1]
    return orth_concat(basis, directions)[:, k:]


def _tail_masses(sigma: np.ndarray) -> np.ndarray:
    """tail[k] = (sum_{j>k} sigma_j^2)^{1/2}, k = 0..len(sigma)"""
    sq = sigma**2
    # 从末尾累加，避免大数吃掉小数
    tail_sq = np.concatenate([np.cumsum(sq[::-1])[::-1], [0.0]])
    return np.sqrt(tail_sq)


def select_rank(sigma: np.ndarray, policy: TruncationPolicy, max_rank: int) -> int:
    """按策略选择截断秩 r1"""
    r_hat = len(sigma)
    if policy.mode is TruncationMode.FIXED_RANK:
        return max(1, min(policy.target_rank, r_hat))
    tails = _tail_masses(sigma)
    admissible = np.nonzero(tails <= policy.theta)[0]
    r1 = int(admissible[0]) if admissible.size else r_hat
    r_max = min(policy.r_max or max_rank, max_rank, r_hat)
    r_min = min(policy.r_min, r_hat)
    if r_min > r_max:
        raise PolicyError(
            f"秩界不可满足: r_min={policy.r_min}, r_max={r_max}",
            detail={"r_hat": r_hat},
        )
    return int(min(max(r1, r_min), r_max))


def truncate_with_mass(
    U_hat: np.ndarray,
    S_hat: np.ndarray,
    V_hat: np.ndarray,
    policy: TruncationPolicy,
    t: float = 0.0,
) -> Tuple[LowRankState, int, float]:
    """
    SVD 截断，同时返回截断前宽度与丢弃质量

    Args:
        U_hat: m x p 正交基
        S_hat: p x q 系数矩阵
        V_hat: n x q 正交基
        policy: 截断策略
        t: 新状态时间

    Returns:
        Tuple[LowRankState, int, float]: (截断后状态, r_hat, 丢弃的奇异值质量)
    """
    if U_hat.shape[1] != S_hat.shape[0] or V_hat.shape[1] != S_hat.shape[1]:
        raise ShapeMismatchError(
            f"截断输入形状不一致: U {U_hat.shape}, S {S_hat.shape}, V {V_hat.shape}"
        )
    if not np.all(np.isfinite(S_hat)):
        raise NumericalError("截断前系数矩阵包含非有限值")
    try:
        P, sigma, Qh = la.svd(S_hat, full_matrices=False, lapack_driver="gesdd")
    except (la.LinAlgError, ValueError):
        logger.warning("gesdd 未收敛，回退到 gesvd (S_hat 形状 %s)", S_hat.shape)
        try:
            P, sigma, Qh = la.svd(S_hat, full_matrices=False, lapack_driver="gesvd")
        except (la.LinAlgError, ValueError) as e:
            raise NumericalError("SVD 失败", detail={"reason": str(e)})

    m, n = U_hat.shape[0], V_hat.shape[0]
    r1 = select_rank(sigma, policy, max_rank=min(m, n))
    discarded = float(_tail_masses(sigma)[r1])
    U1 = U_hat @ P[:, :r1]
    V1 = V_hat @ Qh[:r1, :].conj().T
    S1 = np.diag(sigma[:r1]).astype(np.result_type(U1, V1, S_hat), copy=False)
    state = make_state(U1, S1, V1, t=t)
    return state, int(min(S_hat.shape)), discarded


def truncate(
    U_hat: np.ndarray,
    S_hat: np.ndarray,
    V_hat: np.ndarray,
    policy: TruncationPolicy,
    t: float = 0.0,
) -> LowRankState:
    """SVD 截断: U1 = U_hat P1, S1 = diag(sigma_1..sigma_r1), V1 = V_hat Q1"""
    state, _, _ = truncate_with_mass(U_hat, S_hat, V_hat, policy, t=t)
    return state


def lowrank_from_dense(Y: np.ndarray, policy: TruncationPolicy, t: float = 0.0) -> LowRankState:
    """由稠密矩阵构造低秩状态（可包含零奇异值，用于秩亏初值）"""
    Y = np.asarray(Y)
    if not np.all(np.isfinite(Y)):
        raise InputError("稠密矩阵包含非有限值")
    U, sigma, Vh = la.svd(Y, full_matrices=False)
    return truncate(U, np.diag(sigma).astype(Y.dtype), Vh.conj().T, policy, t=t)


def best_approximation_error(Y: np.ndarray, r: int) -> float:
    """稠密矩阵的最佳秩 r 逼近误差 (sum_{j>r} sigma_j^2)^{1/2}"""
    if r < 0:
        raise InputError(f"秩必须非负，当前: {r}")
    sigma = la.svd(Y, compute_uv=False)
    return float(_tail_masses(sigma)[min(r, len(sigma))])


def _check_pair(X: LowRankState, Z: np.ndarray) -> None:
    if Z.shape != X.shape:
        raise ShapeMismatchError(f"Z 形状 {Z.shape} 与状态形状 {X.shape} 不一致")


def tangent_project(X: LowRankState, Z: np.ndarray) -> np.ndarray:
    """
    切空间正交投影 P(X)Z = U U^H Z (I - V V^H) + Z V V^H
    """
    Z = np.asarray(Z)
    _check_pair(X, Z)
    U, V = X.U, X.V
    Vh = V.conj().T
    UhZ = U.conj().T @ Z
    ZV = Z @ V
    return U @ UhZ - U @ ((UhZ @ V) @ Vh) + ZV @ Vh


def normal_component_norm(X: LowRankState, Z: np.ndarray) -> float:
    """||Z - P(X)Z||_F，即经验 epsilon_r 诊断量"""
    Z = np.asarray(Z)
    return frob_norm(Z - tangent_project(X, Z))


def singular_value_profile(r: int, law: SingularValueLaw) -> np.ndarray:
    i = np.arange(1, r + 1, dtype=float)
    if law is SingularValueLaw.DECADE:
        return 10.0 ** (-i)
    if law is SingularValueLaw.HALVING:
        return 2.0 ** (-i)
    return np.ones(r)


def random_orthonormal(
    rows: int, cols: int, rng: np.random.Generator, field: ScalarField = ScalarField.REAL
) -> np.ndarray:
    """对种子化高斯矩阵做 orth"""
    G = rng.standard_normal((rows, cols))
    if field is ScalarField.COMPLEX:
        G = G + 1j * rng.standard_normal((rows, cols))
    return orth(G)


def random_lowrank(
    m: int,
    n: int,
    r: int,
    seed: int,
    singular_value_law: SingularValueLaw = SingularValueLaw.DECADE,
    field: ScalarField = ScalarField.REAL,
    t: float = 0.0,
) -> LowRankState:
    """
    随机低秩状态，固定种子下确定

    Args:
        m, n, r: 维度与秩, r <= min(m, n)
        seed: 随机种子
        singular_value_law: 奇异值分布，默认 diag(10^-i)
        field: 标量域

    Returns:
        LowRankState: 随机状态
    """
    if min(m, n, r) < 1 or r > min(m, n):
        raise InputError(f"维度非法: m={m}, n={n}, r={r}")
    rng = np.random.default_rng(seed)
    U = random_orthonormal(m, r, rng, field)
    V = random_orthonormal(n, r, rng, field)
    S = np.diag(singular_value_profile(r, singular_value_law)).astype(U.dtype)
    return make_state(U, S, V, t=t)


def reconstruction_error(X: LowRankState, Y: np.ndarray, relative: bool = True) -> float:
    err = frob_norm(X.dense() - Y)
    if not relative:
        return err
    ref = frob_norm(Y)
    return err / ref if ref > 0 else err
