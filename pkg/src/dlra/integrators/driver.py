"""
Author: sy.pan
Date: 2026-03-10 16:02:37
LastEditors: sy.pan
LastEditTime: 2026-10-19 10:38:20
FilePath: /dlra_bench/src/dlra/integrators/driver.py
Description:

Copyright (c) 2026 by sy.pan, All Rights Reserved.
"""

"""
多步驱动: 反复调用单步积分器，记录逐步诊断

时间点按 t_k = t0 + k h 计算，不累加浮点步长；T 不是 h 的整数倍时
最后补一个短步并在日志中标记。
"""

import logging
import math
import time
from typing import Callable, List, Optional

from pydantic import BaseModel, ConfigDict, Field

from dlra.exceptions import InputError, IntegrationFailure, NumericalError
from dlra.integrators.executor import SubstepExecutor
from dlra.integrators.steps import step
from dlra.model.experiment import RejectionConfig
from dlra.model.lowrank_state import LowRankState, TruncationPolicy
from dlra.model.records import RunRecord, StepResult
from dlra.model.solver_config import SolverConfig
from dlra.rhs.base import MatrixOde
from dlra.utils.enums import IntegratorVariant, RejectionStrategy

logger = logging.getLogger(__name__)

Diagnostics = Callable[[RunRecord, StepResult], None]


class Trajectory(BaseModel):
    """
    演化结果

    records[0] 对应初始状态；steps / states 仅在对应 keep_* 选项打开时保存。
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    variant: IntegratorVariant
    initial: LowRankState
    final: LowRankState
    records: List[RunRecord] = Field(default_factory=list)
    steps: List[StepResult] = Field(default_factory=list)
    states: List[LowRankState] = Field(default_factory=list)
    partial_final_step: bool = False

    @property
    def n_steps(self) -> int:
        return len(self.records) - 1

    def norm_drift(self) -> float:
        """max_k | ||Y_k|| - ||Y_0|| |"""
        norm0 = self.records[0].norm
        return max(abs(rec.norm - norm0) for rec in self.records)


def _is_whole(T: float, h: float) -> bool:
    k = int(round(T / h))
    return k >= 1 and abs(k * h - T) <= 1e-10 * T


def step_times(t0: float, T: float, h: float) -> List[float]:
    """宏步终点时间列表，最后一个恰为 t0 + T"""
    if T < 0 or h <= 0:
        raise InputError(f"时间参数非法: T={T}, h={h}")
    if T == 0:
        return []
    if _is_whole(T, h):
        k = int(round(T / h))
        return [t0 + j * h for j in range(1, k)] + [t0 + T]
    k = int(math.floor(T / h))
    return [t0 + j * h for j in range(1, k + 1)] + [t0 + T]


def _step_with_rejection(
    variant: IntegratorVariant,
    state: LowRankState,
    rhs: MatrixOde,
    h: float,
    solver: SolverConfig,
    policy: TruncationPolicy,
    executor: SubstepExecutor,
    rejection: RejectionConfig,
    keep_internals: bool,
):
    """返回 (StepResult, 之后使用的截断策略)"""
    result = step(variant, state, rhs, h, solver, policy, executor, keep_internals)
    if not rejection.enabled or result.eta <= rejection.reject_tol:
        return result, policy

    if rejection.strategy is RejectionStrategy.RAISE_RANK:
        raised = policy.raised(state.rank)
        if raised != policy:
            logger.warning(
                "t=%.6g 拒步 (eta=%.3e > %.3e)，秩界提高 %d 后重算",
                state.t,
                result.eta,
                rejection.reject_tol,
                state.rank,
            )
            retry = step(variant, state, rhs, h, solver, raised, executor, keep_internals)
            return retry.model_copy(update={"rejections": 1}), raised
        logger.warning("t=%.6g 拒步，但容差截断未设秩上界，无法提高秩，改为减半步长", state.t)

    for attempt in range(1, rejection.max_retries + 1):
        n_sub = 2**attempt
        logger.warning(
            "t=%.6g 拒步 (eta=%.3e > %.3e)，改用 %d 个步长 h/%d",
            state.t,
            result.eta,
            rejection.reject_tol,
            n_sub,
            n_sub,
        )
        sub_state = state
        eta = discarded = 0.0
        for j in range(n_sub):
            # 子步终点按整数倍计算，最后一个子步精确落在 t0 + h
            t_end = state.t + h if j == n_sub - 1 else state.t + (j + 1) * h / n_sub
            sub = step(
                variant,
                sub_state,
                rhs,
                t_end - sub_state.t,
                solver,
                policy,
                executor,
                keep_internals,
            )
            sub_state = sub.state
            eta = max(eta, sub.eta)
            discarded += sub.discarded
        result = sub.model_copy(update={"eta": eta, "discarded": discarded, "rejections": attempt})
        if eta <= rejection.reject_tol:
            break
    else:
        logger.warning(
            "重试 %d 次后 eta=%.3e 仍超过阈值，接受该步", rejection.max_retries, result.eta
        )
    return result, policy


def evolve(
    state0: LowRankState,
    rhs: MatrixOde,
    T: float,
    h: float,
    variant: IntegratorVariant,
    solver: SolverConfig,
    policy: TruncationPolicy,
    diagnostics: Optional[Diagnostics] = None,
    executor: Optional[SubstepExecutor] = None,
    rejection: Optional[RejectionConfig] = None,
    keep_internals: bool = False,
    keep_states: bool = False,
    keep_steps: bool = False,
    blowup_factor: Optional[float] = None,
) -> Trajectory:
    """
    从 state0 演化到 state0.t + T

    Args:
        state0: 初始低秩状态
        rhs: 右端项
        T: 演化时长
        h: 宏步长
        variant: 积分器变体
        solver: 子步求解器配置
        policy: 截断策略
        diagnostics: 每步回调 (RunRecord, StepResult)
        executor: 子步执行器，缺省为串行
        rejection: 拒步配置，缺省关闭
        keep_internals / keep_states / keep_steps: 是否保存中间量
        blowup_factor: 设置后当 ||Y_k|| > blowup_factor * (||Y_0|| + t ||G_0||) 时中止

    Returns:
        Trajectory: 演化结果
    """
    executor = executor or SubstepExecutor(threads=1)
    rejection = rejection or RejectionConfig()
    times = step_times(state0.t, T, h)
    partial = bool(times) and not _is_whole(T, h)
    if partial:
        logger.warning("T=%.6g 不是 h=%.6g 的整数倍，最后一步为短步", T, h)

    norm0 = state0.norm()
    traj = Trajectory(
        variant=variant,
        initial=state0,
        final=state0,
        partial_final_step=partial,
        records=[RunRecord(step=0, time=state0.t, h=h, rank=state0.rank, norm=norm0)],
    )
    if keep_states:
        traj.states.append(state0)

    source_norm = rhs.source_norm() if blowup_factor is not None else 0.0
    state = state0
    wall = 0.0
    current_policy = policy
    for k, t_next in enumerate(times, start=1):
        h_k = t_next - state.t
        start = time.perf_counter()
        try:
            result, current_policy = _step_with_rejection(
                variant,
                state,
                rhs,
                h_k,
                solver,
                current_policy,
                executor,
                rejection,
                keep_internals,
            )
        except NumericalError as e:
            raise IntegrationFailure(
                f"第 {k} 步 (t={state.t:.6g}) 失败: {e.message}",
                detail={"step": k, "t": state.t, **e.detail},
                partial=traj,
            )
        wall += time.perf_counter() - start
        # 时间以整数倍网格为准，消除浮点累加
        state = result.state.model_copy(update={"t": t_next})
        norm = state.norm()

        stats = result.substep_stats
        record = RunRecord(
            step=k,
            time=t_next,
            h=h_k,
            rank=state.rank,
            norm=norm,
            eta=result.eta,
            discarded=result.discarded,
            wall_time=wall,
            stage_count=result.stage_count,
            rejections=result.rejections,
            wall_K=stats["K"].wall_time if "K" in stats else 0.0,
            wall_L=stats["L"].wall_time if "L" in stats else 0.0,
            wall_S=stats["S"].wall_time if "S" in stats else 0.0,
        )
        traj.records.append(record)
        traj.final = state
        if keep_states:
            traj.states.append(state)
        if keep_steps:
            traj.steps.append(result)
        logger.debug(
            "%s k=%d t=%.6g r=%d ||Y||=%.12e eta=%.3e",
            variant.value,
            k,
            t_next,
            state.rank,
            norm,
            result.eta,
        )
        if diagnostics is not None:
            diagnostics(record, result)

        if blowup_factor is not None:
            limit = blowup_factor * (norm0 + (t_next - state0.t) * source_norm)
            if not math.isfinite(norm) or norm > limit:
                raise IntegrationFailure(
                    f"范数爆炸: ||Y||={norm:.3e} 超过上限 {limit:.3e}",
                    detail={"step": k, "t": t_next, "norm": norm, "limit": limit},
                    partial=traj,
                )
    return traj
