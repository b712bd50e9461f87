"""
Author: sy.pan
Date: 2026-04-20 10:55:12
LastEditors: sy.pan
LastEditTime: 2026-10-19 11:06:49
FilePath: /dlra_bench/src/dlra/services/convergence_service.py
Description:

Copyright (c) 2026 by sy.pan, All Rights Reserved.
"""

"""
收敛阶与范数漂移研究

对每个 (variant, rank, h) 演化到 T，按 h 分组写 CSV 并拟合斜率:
  - convergence: 相对误差 ||Y(T) - A_ref(T)|| / ||A_ref(T)||
  - norm-drift:  max_k | ||Y_k|| - ||Y_0|| |，另有单步漂移与单步 theta 扫描
  - 参考解的最佳秩 r 逼近误差作为误差下界写出，斜率拟合剔除下界附近的点
"""

import logging
from pathlib import Path
from typing import Callable, Dict, List, NamedTuple, Optional

import numpy as np
import pandas as pd

from dlra.core.lowrank import best_approximation_error, frob_norm
from dlra.exceptions import NormCompatibilityError
from dlra.integrators.driver import Trajectory, evolve
from dlra.integrators.executor import SubstepExecutor
from dlra.integrators.steps import step
from dlra.model.experiment import ExperimentConfig
from dlra.model.lowrank_state import TruncationPolicy
from dlra.problems.registry import BenchmarkProblem, build_problem
from dlra.rhs.base import norm_compatibility_defect
from dlra.services.reference_service import reference_solution
from dlra.utils.enums import IntegratorVariant, PlotKind
from dlra.utils.io_utils import ensure_dir, write_csv
from dlra.utils.plotting import render_plot
from dlra.utils.slope import fit_slope, local_slopes

logger = logging.getLogger(__name__)

NORM_COMPAT_PROBES = 20
NORM_COMPAT_TOL = 1e-10

SLOPE_COLUMNS = ["variant", "rank", "slope", "intercept", "residual", "points_used", "floor_flagged"]


class ThetaSweep(NamedTuple):
    """单步 theta 扫描: 漂移表，以及对 theta 与对实际丢弃质量的两组斜率"""

    table: pd.DataFrame
    theta_slopes: pd.DataFrame
    discarded_slopes: pd.DataFrame


class StudyResult(NamedTuple):
    """一次研究的输出表与文件路径"""

    table: pd.DataFrame
    slopes: pd.DataFrame
    table_path: Path
    slopes_path: Path


def _seeds(config: ExperimentConfig) -> List[int]:
    return list(config.seeds) if config.seeds else [config.seed]


def _stem(name: str, seed: int, n_seeds: int) -> str:
    return name if n_seeds == 1 else f"{name}_s{seed}"


def _add_local_slopes(rows: List[dict], value: str) -> pd.DataFrame:
    """按 (variant, rank) 分组计算局部斜率，行顺序与步长网格一致"""
    df = pd.DataFrame(rows)
    df["slope_local"] = np.nan
    for _, idx in df.groupby(["variant", "rank"], sort=False).groups.items():
        df.loc[idx, "slope_local"] = local_slopes(df.loc[idx, "h"], df.loc[idx, value])
    return df


def _fit_groups(
    df: pd.DataFrame, x: str, value: str, floors: Optional[Dict[int, float]] = None
) -> pd.DataFrame:
    rows = []
    for (variant, rank), group in df.groupby(["variant", "rank"], sort=False):
        positive = group[(group[value] > 0) & (group[x] > 0)]
        if len(positive) < 3:
            logger.warning("%s r=%d 只有 %d 个正值点，跳过斜率拟合", variant, rank, len(positive))
            continue
        floor = floors.get(rank) if floors else None
        fit = fit_slope(positive[x], positive[value], floor=floor)
        rows.append({"variant": variant, "rank": rank, **fit.model_dump()})
        logger.info(
            "%s r=%d: 斜率 %.3f (残差 %.2e, %d 点%s)",
            variant,
            rank,
            fit.slope,
            fit.residual,
            fit.points_used,
            ", 平台截断" if fit.floor_flagged else "",
        )
    return pd.DataFrame(rows, columns=SLOPE_COLUMNS)


def _sweep(
    config: ExperimentConfig,
    problem_for_rank: Callable[[int], BenchmarkProblem],
    measure: Callable[[BenchmarkProblem, Trajectory], float],
    value: str,
    executor: SubstepExecutor,
) -> List[dict]:
    rows = []
    for variant in config.variants:
        for rank in config.ranks:
            problem = problem_for_rank(rank)
            policy = config.truncation.with_rank(rank)
            for h in config.h_grid.as_list():
                traj = evolve(
                    problem.initial,
                    problem.rhs,
                    config.T,
                    h,
                    variant,
                    config.solver,
                    policy,
                    executor=executor,
                    rejection=config.rejection,
                )
                result = measure(problem, traj)
                logger.info("%s r=%d h=%.3e: %s=%.6e", variant.value, rank, h, value, result)
                rows.append({"variant": variant.value, "rank": rank, "h": h, value: result})
    return rows


def _problems(config: ExperimentConfig, seed: int) -> Callable[[int], BenchmarkProblem]:
    cache: Dict[int, BenchmarkProblem] = {}

    def problem_for_rank(rank: int) -> BenchmarkProblem:
        if rank not in cache:
            cache[rank] = build_problem(config.problem, rank, seed)
        return cache[rank]

    return problem_for_rank


def _write_study(
    config: ExperimentConfig, df: pd.DataFrame, slopes: pd.DataFrame, stem: str, kind: PlotKind
) -> StudyResult:
    out = ensure_dir(config.output_dir)
    table_path = write_csv(df, out / f"{stem}.csv")
    slopes_path = write_csv(slopes, out / f"{stem}_slopes.csv")
    if (df.iloc[:, 3] > 0).any():
        render_plot(table_path, kind, out / f"{stem}.svg")
    return StudyResult(df, slopes, table_path, slopes_path)


def rank_floors(A_ref: np.ndarray, ranks: List[int]) -> Dict[int, float]:
    """参考解在各秩下的最佳逼近相对误差，即秩 r 低秩解能达到的误差下界"""
    ref_norm = frob_norm(A_ref)
    return {rank: best_approximation_error(A_ref, rank) / ref_norm for rank in ranks}


def run_convergence(config: ExperimentConfig) -> List[StudyResult]:
    """
    收敛阶研究

    有闭式解的问题直接用闭式解作参考，否则使用缓存的 embedded45 参考解。

    Args:
        config: 实验配置

    Returns:
        List[StudyResult]: 每个种子一个结果，CSV 列为 variant,rank,h,error,slope_local
    """
    seeds = _seeds(config)
    results = []
    with SubstepExecutor(config.threads) as executor:
        for seed in seeds:
            problem_for_rank = _problems(config, seed)
            base = problem_for_rank(config.ranks[0])
            if base.exact is not None:
                A_ref = base.exact(base.initial.t + config.T)
            else:
                ref = config.reference
                A_ref = reference_solution(
                    base,
                    config.T,
                    rtol=ref.rtol,
                    atol=ref.atol,
                    max_steps=ref.max_steps,
                    cache_dir=ref.cache_dir if ref.use_cache else None,
                    seed=seed,
                )
            ref_norm = frob_norm(A_ref)
            floors = rank_floors(A_ref, config.ranks)
            for rank, floor in floors.items():
                logger.info("r=%d: 最佳逼近误差下界 %.3e", rank, floor)

            def relative_error(problem: BenchmarkProblem, traj: Trajectory) -> float:
                return frob_norm(traj.final.dense() - A_ref) / ref_norm

            rows = _sweep(config, problem_for_rank, relative_error, "error", executor)
            df = _add_local_slopes(rows, "error")
            slopes = _fit_groups(df, "h", "error", floors)
            stem = _stem("convergence", seed, len(seeds))
            results.append(_write_study(config, df, slopes, stem, PlotKind.CONVERGENCE))
            floor_df = pd.DataFrame({"rank": list(floors), "floor": list(floors.values())})
            write_csv(floor_df, config.output_dir / f"{stem}_floors.csv")
    return results


def check_norm_compatible(problem: BenchmarkProblem, seed: int = 0) -> float:
    """随机探测 Re<Z, F(Z)>，不相容时抛出 NormCompatibilityError"""
    defect = norm_compatibility_defect(problem.rhs, n_probes=NORM_COMPAT_PROBES, seed=seed)
    if defect > NORM_COMPAT_TOL:
        raise NormCompatibilityError(
            f"问题 {problem.spec.kind.value} 不满足范数相容条件",
            detail={"defect": defect, "tolerance": NORM_COMPAT_TOL},
        )
    return defect


def theta_sweep(
    problem: BenchmarkProblem,
    variants: List[IntegratorVariant],
    thetas: List[float],
    h: float,
    config: ExperimentConfig,
    executor: SubstepExecutor,
) -> ThetaSweep:
    """
    单步截断容差扫描: 对每个 theta 以 tolerance 策略走一个宏步，记录 | ||Y_1|| - ||Y_0|| |

    实际丢弃质量受奇异值间隔影响，只能取到不超过 theta 的若干离散值，
    因此漂移同时对 theta 与对实际丢弃质量拟合斜率。

    Returns:
        ThetaSweep: variant,rank,theta,drift,discarded 表与两组斜率表
    """
    state0 = problem.initial
    rows = []
    for variant in variants:
        for theta in thetas:
            policy = TruncationPolicy.tolerance(theta)
            result = step(variant, state0, problem.rhs, h, config.solver, policy, executor)
            drift = abs(result.state.norm() - state0.norm())
            rows.append(
                {
                    "variant": variant.value,
                    "rank": state0.rank,
                    "theta": theta,
                    "drift": drift,
                    "discarded": result.discarded,
                }
            )
            logger.info(
                "%s theta=%.1e: drift=%.3e, 丢弃 %.3e, 秩 %d",
                variant.value,
                theta,
                drift,
                result.discarded,
                result.state.rank,
            )
    df = pd.DataFrame(rows)
    return ThetaSweep(df, _fit_groups(df, "theta", "drift"), _fit_groups(df, "discarded", "drift"))


def step_drift_sweep(
    config: ExperimentConfig,
    problem_for_rank: Callable[[int], BenchmarkProblem],
    executor: SubstepExecutor,
) -> pd.DataFrame:
    """
    单步范数漂移: 从初值走一个宏步

    drift 为截断前的 | ||Y^_1|| - ||Y_0|| |，其中 ||Y^_1||^2 = ||Y_1||^2 + 丢弃质量^2，
    只含步长相关部分；truncated_drift 为截断后的漂移。

    Returns:
        pd.DataFrame: variant,rank,h,drift,truncated_drift,slope_local
    """
    rows = []
    for variant in config.variants:
        for rank in config.ranks:
            problem = problem_for_rank(rank)
            policy = config.truncation.with_rank(rank)
            norm0 = problem.initial.norm()
            for h in config.h_grid.as_list():
                result = step(
                    variant, problem.initial, problem.rhs, h, config.solver, policy, executor
                )
                norm1 = result.state.norm()
                drift = abs(float(np.hypot(norm1, result.discarded)) - norm0)
                logger.info("%s r=%d h=%.3e: 单步漂移 %.6e", variant.value, rank, h, drift)
                rows.append(
                    {
                        "variant": variant.value,
                        "rank": rank,
                        "h": h,
                        "drift": drift,
                        "truncated_drift": abs(norm1 - norm0),
                    }
                )
    return _add_local_slopes(rows, "drift")


def run_norm_drift(config: ExperimentConfig) -> List[StudyResult]:
    """
    范数漂移研究

    除整条轨迹的漂移外，额外输出单步漂移 norm_drift_step*.csv；
    theta_sweep 非空时再输出 norm_drift_theta*.csv。

    Args:
        config: 实验配置

    Returns:
        List[StudyResult]: 每个种子一个结果，CSV 列为 variant,rank,h,drift,slope_local
    """
    seeds = _seeds(config)
    results = []
    with SubstepExecutor(config.threads) as executor:
        for seed in seeds:
            problem_for_rank = _problems(config, seed)
            base = problem_for_rank(config.ranks[0])
            defect = check_norm_compatible(base, seed)
            logger.info("范数相容性缺陷 %.3e", defect)

            def drift(problem: BenchmarkProblem, traj: Trajectory) -> float:
                return traj.norm_drift()

            rows = _sweep(config, problem_for_rank, drift, "drift", executor)
            df = _add_local_slopes(rows, "drift")
            slopes = _fit_groups(df, "h", "drift")
            stem = _stem("norm_drift", seed, len(seeds))
            results.append(_write_study(config, df, slopes, stem, PlotKind.NORM_DRIFT))

            out = ensure_dir(config.output_dir)
            step_df = step_drift_sweep(config, problem_for_rank, executor)
            write_csv(step_df, out / f"{stem}_step.csv")
            write_csv(_fit_groups(step_df, "h", "drift"), out / f"{stem}_step_slopes.csv")

            if config.theta_sweep:
                sweep = theta_sweep(
                    base, config.variants, config.theta_sweep, config.theta_step, config, executor
                )
                write_csv(sweep.table, out / f"{stem}_theta.csv")
                write_csv(sweep.theta_slopes, out / f"{stem}_theta_slopes.csv")
                write_csv(sweep.discarded_slopes, out / f"{stem}_theta_discarded_slopes.csv")
    return results
