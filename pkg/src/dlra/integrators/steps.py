"""
Author: sy.pan
Date: 2026-03-09 11:26:03
LastEditors: sy.pan
LastEditTime: 2026-10-18 17:53:41
FilePath: /dlra_bench/src/dlra/integrators/steps.py
Description:

Copyright (c) 2026 by sy.pan, All Rights Reserved.
"""

"""
单个宏步的四种 BUG 积分器

  parallel1      一阶并行 BUG（2r x 2r 增广系数矩阵）
  parallel2_v1   二阶并行 BUG，半步基 U*/V* 增广（3r x 3r）
  parallel2_v2   二阶并行 BUG，K(t1)/L(t1) 全列空间增广（4r x 4r）
  augmented_bug  增广 BUG：K/L 步之后顺序执行一次 2r x 2r Galerkin 步

所有转置均为共轭转置。三个并行子步只共享只读输入，交给 SubstepExecutor 执行。
"""

import logging
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from dlra.core.lowrank import new_directions, orth, orth_concat, truncate_with_mass
from dlra.exceptions import ShapeMismatchError
from dlra.integrators.executor import SubstepExecutor
from dlra.model.lowrank_state import LowRankState, TruncationPolicy
from dlra.model.records import StepInternals, StepResult, SubstepStats
from dlra.model.solver_config import SolverConfig
from dlra.rhs.base import MatrixOde
from dlra.solvers.substep import integrate_with_stats
from dlra.utils.enums import IntegratorVariant

logger = logging.getLogger(__name__)

_SERIAL = SubstepExecutor(threads=1)


def _adj(X: np.ndarray) -> np.ndarray:
    return X.conj().T


def _projection_cache(rhs: MatrixOde, U: np.ndarray, V: np.ndarray):
    """每个宏步（每个阶段）一次的投影因子缓存；时间相关右端项返回 None"""
    if rhs.supports_projection_cache:
        return rhs.precompute_projected_factors(U, V)
    return None


def _run_substeps(
    executor: SubstepExecutor,
    jobs: Dict[str, Tuple[Callable, np.ndarray]],
    t0: float,
    t1: float,
    solver: SolverConfig,
) -> Tuple[Dict[str, np.ndarray], Dict[str, SubstepStats]]:
    tasks = {
        name: (lambda f=f, Y0=Y0: integrate_with_stats(f, Y0, t0, t1, solver))
        for name, (f, Y0) in jobs.items()
    }
    outcomes = executor.run(tasks)
    values = {name: out[0] for name, out in outcomes.items()}
    stats = {name: out[1] for name, out in outcomes.items()}
    return values, stats


def _work_dtype(state: LowRankState, rhs: MatrixOde) -> np.dtype:
    return np.result_type(state.dtype, rhs.dtype)


def _augmented_block(
    S_bar: np.ndarray, K1: np.ndarray, L1: np.ndarray, U_new: np.ndarray, V_new: np.ndarray
) -> np.ndarray:
    """[[S_bar, L1^H V_new], [U_new^H K1, 0]]，右下块恒为零"""
    upper_right = _adj(L1) @ V_new
    lower_left = _adj(U_new) @ K1
    zero = np.zeros((U_new.shape[1], V_new.shape[1]), dtype=S_bar.dtype)
    return np.block([[S_bar, upper_right], [lower_left, zero]])


def rejection_estimate(
    rhs: MatrixOde,
    t0: float,
    Y0,
    U_tilde: np.ndarray,
    V_tilde: np.ndarray,
) -> float:
    """
    拒步估计 eta = ||U~^H F(t0, Y0) V~||_F

    Args:
        rhs: 右端项
        t0: 时间
        Y0: LowRankState 或稠密矩阵
        U_tilde, V_tilde: 新增方向块，与保留基正交

    Returns:
        float: eta >= 0；任一新增块为空时为 0
    """
    if U_tilde.shape[1] == 0 or V_tilde.shape[1] == 0:
        return 0.0
    if not isinstance(Y0, LowRankState):
        Y0 = np.asarray(Y0)
        if Y0.shape != (U_tilde.shape[0], V_tilde.shape[0]):
            raise ShapeMismatchError(f"Y0 形状 {Y0.shape} 与新增方向块不一致")
        return float(np.linalg.norm(_adj(U_tilde) @ rhs.eval_full(t0, Y0) @ V_tilde))

    # 在扩展基 [U0, U~] x [V0, V~] 上做一次 Galerkin 求值，取右下块
    r = Y0.rank
    U_ext = np.hstack([Y0.U, U_tilde])
    V_ext = np.hstack([Y0.V, V_tilde])
    S_ext = np.zeros((U_ext.shape[1], V_ext.shape[1]), dtype=np.result_type(Y0.S, U_ext, V_ext))
    S_ext[:r, :r] = Y0.S
    block = rhs.eval_S(t0, S_ext, U_ext, V_ext)[r:, r:]
    return float(np.linalg.norm(block))


def _finish(
    variant: IntegratorVariant,
    rhs: MatrixOde,
    state: LowRankState,
    t1: float,
    U_hat1: np.ndarray,
    S_hat1: np.ndarray,
    V_hat1: np.ndarray,
    retained: Tuple[int, int],
    policy: TruncationPolicy,
    stats: Dict[str, SubstepStats],
    internals: Optional[Dict[str, np.ndarray]],
) -> StepResult:
    U_tilde = U_hat1[:, retained[0] :]
    V_tilde = V_hat1[:, retained[1] :]
    eta = rejection_estimate(rhs, state.t, state, U_tilde, V_tilde)
    new_state, r_hat, discarded = truncate_with_mass(U_hat1, S_hat1, V_hat1, policy, t=t1)
    kept = None
    if internals is not None:
        kept = StepInternals(
            U_hat1=U_hat1, V_hat1=V_hat1, S_hat1=S_hat1, retained_shape=retained, **internals
        )
    logger.debug(
        "%s 步 t=%.6g: r_hat=%d -> r=%d, 丢弃 %.3e, eta=%.3e",
        variant.value,
        t1,
        r_hat,
        new_state.rank,
        discarded,
        eta,
    )
    return StepResult(
        state=new_state,
        r_hat=r_hat,
        discarded=discarded,
        eta=eta,
        stage_count=variant.stage_count,
        substep_stats=stats,
        internals=kept,
    )


def step_parallel1(
    state: LowRankState,
    rhs: MatrixOde,
    h: float,
    solver: SolverConfig,
    policy: TruncationPolicy,
    executor: Optional[SubstepExecutor] = None,
    keep_internals: bool = False,
) -> StepResult:
    """
    一阶并行 BUG 步

    K 步以 V0 为投影基，L 步以 U0 为投影基，S 步在 (U0, V0) 上从 S0 出发；
    三者互不依赖。增广基 U1 = [U0, U~1]，U~1 为 K(t1) 中与 U0 正交的新方向。
    """
    executor = executor or _SERIAL
    U0, S0, V0, t0 = state.U, state.S, state.V, state.t
    t1 = t0 + h
    dtype = _work_dtype(state, rhs)
    cache = _projection_cache(rhs, U0, V0)

    jobs = {
        "K": (lambda t, K: rhs.eval_K(t, K, V0, cache=cache), (U0 @ S0).astype(dtype)),
        "L": (lambda t, L: rhs.eval_L(t, L, U0, cache=cache), (V0 @ _adj(S0)).astype(dtype)),
        "S": (lambda t, S: rhs.eval_S(t, S, U0, V0, cache=cache), S0.astype(dtype)),
    }
    values, stats = _run_substeps(executor, jobs, t0, t1, solver)
    K1, L1, S_bar = values["K"], values["L"], values["S"]

    U_new = new_directions(U0, K1)
    V_new = new_directions(V0, L1)
    U_hat1 = np.hstack([U0, U_new])
    V_hat1 = np.hstack([V0, V_new])
    S_hat1 = _augmented_block(S_bar, K1, L1, U_new, V_new)

    internals = dict(U_hat0=U0, V_hat0=V0, K1=K1, L1=L1) if keep_internals else None
    return _finish(
        IntegratorVariant.PARALLEL1,
        rhs,
        state,
        t1,
        U_hat1,
        S_hat1,
        V_hat1,
        (state.rank, state.rank),
        policy,
        stats,
        internals,
    )


def _second_order_common(
    state: LowRankState,
    rhs: MatrixOde,
    h: float,
    solver: SolverConfig,
    executor: SubstepExecutor,
):
    """
    二阶变体共用部分

    U_hat0 = orth([U0, F(t0,Y0) V0]), V_hat0 = orth([V0, F(t0,Y0)^H U0])，
    然后在 (U_hat0, V_hat0) 上并行执行 K/L/S 子步。
    """
    U0, S0, V0, t0 = state.U, state.S, state.V, state.t
    t1 = t0 + h
    dtype = _work_dtype(state, rhs)
    K_init = (U0 @ S0).astype(dtype)
    L_init = (V0 @ _adj(S0)).astype(dtype)

    # F(t0, Y0) V0 与 F(t0, Y0)^H U0 由 K / L 形式直接给出
    FV0 = rhs.eval_K(t0, K_init, V0)
    FhU0 = rhs.eval_L(t0, L_init, U0)
    U_hat0 = orth_concat(U0, FV0)
    V_hat0 = orth_concat(V0, FhU0)

    VhV = _adj(V0) @ V_hat0
    UhU = _adj(U_hat0) @ U0
    K0 = K_init @ VhV
    L0 = L_init @ (_adj(U0) @ U_hat0)
    S_bar0 = UhU @ S0.astype(dtype) @ VhV

    cache = _projection_cache(rhs, U_hat0, V_hat0)
    jobs = {
        "K": (lambda t, K: rhs.eval_K(t, K, V_hat0, cache=cache), K0),
        "L": (lambda t, L: rhs.eval_L(t, L, U_hat0, cache=cache), L0),
        "S": (lambda t, S: rhs.eval_S(t, S, U_hat0, V_hat0, cache=cache), S_bar0),
    }
    values, stats = _run_substeps(executor, jobs, t0, t1, solver)
    return U_hat0, V_hat0, FV0, FhU0, K_init, L_init, values, stats


def step_parallel2_v1(
    state: LowRankState,
    rhs: MatrixOde,
    h: float,
    solver: SolverConfig,
    policy: TruncationPolicy,
    executor: Optional[SubstepExecutor] = None,
    keep_internals: bool = False,
) -> StepResult:
    """
    二阶并行 BUG 步（半步基增广）

    U* = orth(Y0 V0 + h/2 F(t0,Y0) V0), V* = orth(Y0^H U0 + h/2 F(t0,Y0)^H U0)，
    新方向取 K(t1) V_hat0^H V* 与 L(t1) U_hat0^H U* 中与 U_hat0 / V_hat0 正交的部分。
    """
    executor = executor or _SERIAL
    U_hat0, V_hat0, FV0, FhU0, K_init, L_init, values, stats = _second_order_common(
        state, rhs, h, solver, executor
    )
    K1, L1, S_bar = values["K"], values["L"], values["S"]

    U_star = orth(K_init + 0.5 * h * FV0)
    V_star = orth(L_init + 0.5 * h * FhU0)
    U_new = new_directions(U_hat0, K1 @ (_adj(V_hat0) @ V_star))
    V_new = new_directions(V_hat0, L1 @ (_adj(U_hat0) @ U_star))
    U_hat1 = np.hstack([U_hat0, U_new])
    V_hat1 = np.hstack([V_hat0, V_new])
    S_hat1 = _augmented_block(S_bar, K1, L1, U_new, V_new)

    internals = None
    if keep_internals:
        internals = dict(U_hat0=U_hat0, V_hat0=V_hat0, K1=K1, L1=L1, FV0=FV0)
    return _finish(
        IntegratorVariant.PARALLEL2_V1,
        rhs,
        state,
        state.t + h,
        U_hat1,
        S_hat1,
        V_hat1,
        S_bar.shape,
        policy,
        stats,
        internals,
    )


def step_parallel2_v2(
    state: LowRankState,
    rhs: MatrixOde,
    h: float,
    solver: SolverConfig,
    policy: TruncationPolicy,
    executor: Optional[SubstepExecutor] = None,
    keep_internals: bool = False,
) -> StepResult:
    """二阶并行 BUG 步（以 K(t1) / L(t1) 的全部列空间增广，不计算 U*/V*）"""
    executor = executor or _SERIAL
    U_hat0, V_hat0, FV0, _, _, _, values, stats = _second_order_common(
        state, rhs, h, solver, executor
    )
    K1, L1, S_bar = values["K"], values["L"], values["S"]

    U_new = new_directions(U_hat0, K1)
    V_new = new_directions(V_hat0, L1)
    U_hat1 = np.hstack([U_hat0, U_new])
    V_hat1 = np.hstack([V_hat0, V_new])
    S_hat1 = _augmented_block(S_bar, K1, L1, U_new, V_new)

    internals = None
    if keep_internals:
        internals = dict(U_hat0=U_hat0, V_hat0=V_hat0, K1=K1, L1=L1, FV0=FV0)
    return _finish(
        IntegratorVariant.PARALLEL2_V2,
        rhs,
        state,
        state.t + h,
        U_hat1,
        S_hat1,
        V_hat1,
        S_bar.shape,
        policy,
        stats,
        internals,
    )


def step_augmented_bug(
    state: LowRankState,
    rhs: MatrixOde,
    h: float,
    solver: SolverConfig,
    policy: TruncationPolicy,
    executor: Optional[SubstepExecutor] = None,
    keep_internals: bool = False,
) -> StepResult:
    """
    增广 BUG 步

    阶段一: K/L 子步（基 V0 / U0）；阶段二: 在 U_hat = orth([U0, K(t1)]),
    V_hat = orth([V0, L(t1)]) 上从 U_hat^H Y0 V_hat 出发的 Galerkin 步。
    """
    executor = executor or _SERIAL
    U0, S0, V0, t0 = state.U, state.S, state.V, state.t
    t1 = t0 + h
    dtype = _work_dtype(state, rhs)

    cache = _projection_cache(rhs, U0, V0)
    jobs = {
        "K": (lambda t, K: rhs.eval_K(t, K, V0, cache=cache), (U0 @ S0).astype(dtype)),
        "L": (lambda t, L: rhs.eval_L(t, L, U0, cache=cache), (V0 @ _adj(S0)).astype(dtype)),
    }
    values, stats = _run_substeps(executor, jobs, t0, t1, solver)
    K1, L1 = values["K"], values["L"]

    U_hat = orth_concat(U0, K1)
    V_hat = orth_concat(V0, L1)
    S_hat0 = (_adj(U_hat) @ U0) @ S0.astype(dtype) @ (_adj(V0) @ V_hat)

    galerkin_cache = _projection_cache(rhs, U_hat, V_hat)
    S_values, S_stats = _run_substeps(
        executor,
        {"S": (lambda t, S: rhs.eval_S(t, S, U_hat, V_hat, cache=galerkin_cache), S_hat0)},
        t0,
        t1,
        solver,
    )
    stats.update(S_stats)

    internals = dict(U_hat0=U0, V_hat0=V0, K1=K1, L1=L1) if keep_internals else None
    return _finish(
        IntegratorVariant.AUGMENTED_BUG,
        rhs,
        state,
        t1,
        U_hat,
        S_values["S"],
        V_hat,
        (state.rank, state.rank),
        policy,
        stats,
        internals,
    )


STEP_FUNCTIONS = {
    IntegratorVariant.PARALLEL1: step_parallel1,
    IntegratorVariant.PARALLEL2_V1: step_parallel2_v1,
    IntegratorVariant.PARALLEL2_V2: step_parallel2_v2,
    IntegratorVariant.AUGMENTED_BUG: step_augmented_bug,
}


def step(
    variant: IntegratorVariant,
    state: LowRankState,
    rhs: MatrixOde,
    h: float,
    solver: SolverConfig,
    policy: TruncationPolicy,
    executor: Optional[SubstepExecutor] = None,
    keep_internals: bool = False,
) -> StepResult:
    """按变体分派单步"""
    return STEP_FUNCTIONS[variant](
        state, rhs, h, solver, policy, executor=executor, keep_internals=keep_internals
    )


__all__ = [
    "STEP_FUNCTIONS",
    "rejection_estimate",
    "step",
    "step_augmented_bug",
    "step_parallel1",
    "step_parallel2_v1",
    "step_parallel2_v2",
]
