"""
lattice 运行服务

固定秩运行各变体，输出:
  - lattice_{variant}_r{rank}_flux.csv / .svg   标量通量 x,y,phi 与 log10 热图
  - lattice_{variant}_r{rank}_records.csv       逐步记录（不含墙钟时间）
  - lattice_{variant}_r{rank}_timing.csv        逐步墙钟时间，按 K/L/S 子步拆分
  - lattice_summary.csv                         每次运行的摘要
  - lattice_comparison.csv                      同秩不同变体的通量相对 L2 差
"""

import logging
from itertools import combinations
from pathlib import Path
from typing import Dict, List, NamedTuple, Tuple

import numpy as np
import pandas as pd

from dlra.exceptions import ConfigError, IntegrationFailure
from dlra.integrators.driver import Trajectory, evolve
from dlra.integrators.executor import SubstepExecutor
from dlra.model.experiment import ExperimentConfig
from dlra.problems.lattice import LatticeProblem, lattice_scalar_flux
from dlra.problems.registry import build_problem
from dlra.utils.enums import PlotKind, ProblemKind
from dlra.utils.io_utils import ensure_dir, models_to_frame, write_csv
from dlra.utils.plotting import render_plot

logger = logging.getLogger(__name__)

# 范数超过 BLOWUP_FACTOR * (||Y_0|| + t ||G_0||) 视为失稳
BLOWUP_FACTOR = 1e6

TIMING_FIELDS = ("wall_time", "wall_K", "wall_L", "wall_S")


class LatticeRun(NamedTuple):
    variant: str
    rank: int
    trajectory: Trajectory
    flux: np.ndarray


class LatticeResult(NamedTuple):
    runs: List[LatticeRun]
    summary: pd.DataFrame
    comparison: pd.DataFrame
    output_dir: Path


def flux_frame(phi: np.ndarray, problem: LatticeProblem) -> pd.DataFrame:
    """n_x x n_y 场展开为 x,y,phi 表（x 外层循环）"""
    centers = problem.cell_centers()
    X, Y = np.meshgrid(centers, centers, indexing="ij")
    return pd.DataFrame({"x": X.ravel(), "y": Y.ravel(), "phi": phi.ravel()})


def relative_l2_difference(phi_a: np.ndarray, phi_b: np.ndarray) -> float:
    scale = max(np.linalg.norm(phi_a), np.linalg.norm(phi_b))
    if scale == 0.0:
        return 0.0
    return float(np.linalg.norm(phi_a - phi_b) / scale)


def _write_records(traj: Trajectory, out: Path, stem: str) -> None:
    write_csv(models_to_frame(traj.records, exclude=TIMING_FIELDS), out / f"{stem}_records.csv")
    timing = models_to_frame(traj.records)[["step", *TIMING_FIELDS]]
    write_csv(timing, out / f"{stem}_timing.csv")


def _max_in_source(phi: np.ndarray, problem: LatticeProblem) -> bool:
    mask = problem.source_block_mask()
    if not mask.any():
        return False
    return bool(mask[np.unravel_index(np.argmax(phi), phi.shape)])


def run_lattice(config: ExperimentConfig) -> LatticeResult:
    """
    lattice 基准运行

    步长 h = cfl * dx；范数爆炸时写出已完成部分的逐步记录后中止。

    Args:
        config: 实验配置（problem.kind 必须为 lattice）

    Returns:
        LatticeResult: 各次运行、摘要表与对比表
    """
    if config.problem.kind is not ProblemKind.LATTICE:
        raise ConfigError(f"lattice 子命令要求 problem.kind=lattice，当前: {config.problem.kind}")

    out = ensure_dir(config.output_dir)
    base = build_problem(config.problem, config.ranks[0], config.seed)
    lattice = base.lattice
    h = lattice.time_step(config.problem.cfl)
    logger.info(
        "lattice 运行: T=%.4g, h=%.4g, 求解器 %s, 变体 %s, 秩 %s",
        config.T,
        h,
        config.solver.label,
        [v.value for v in config.variants],
        config.ranks,
    )

    runs: List[LatticeRun] = []
    summary_rows = []
    with SubstepExecutor(config.threads) as executor:
        for variant in config.variants:
            for rank in config.ranks:
                stem = f"lattice_{variant.value}_r{rank}"
                try:
                    traj = evolve(
                        lattice.initial_state(rank),
                        lattice.rhs,
                        config.T,
                        h,
                        variant,
                        config.solver,
                        config.truncation.with_rank(rank),
                        executor=executor,
                        rejection=config.rejection,
                        blowup_factor=BLOWUP_FACTOR,
                    )
                except IntegrationFailure as e:
                    if e.partial is not None:
                        _write_records(e.partial, out, stem)
                        last = e.partial.records[-1]
                        logger.error(
                            "%s r=%d 在 t=%.4g 失稳 (||Y||=%.3e)，已写出 %d 步记录",
                            variant.value,
                            rank,
                            last.time,
                            last.norm,
                            e.partial.n_steps,
                        )
                    raise

                phi = lattice_scalar_flux(traj.final, lattice)
                flux_path = write_csv(flux_frame(phi, lattice), out / f"{stem}_flux.csv")
                render_plot(flux_path, PlotKind.FLUX, out / f"{stem}_flux.svg")
                _write_records(traj, out, stem)

                last = traj.records[-1]
                in_source = _max_in_source(phi, lattice)
                summary_rows.append(
                    {
                        "variant": variant.value,
                        "rank": rank,
                        "steps": traj.n_steps,
                        "stage_count": max(rec.stage_count for rec in traj.records),
                        "final_norm": last.norm,
                        "phi_max": float(phi.max()),
                        "phi_max_in_source": in_source,
                    }
                )
                logger.info(
                    "%s r=%d: %d 步, 墙钟 %.2f s (K %.2f, L %.2f, S %.2f), max Phi=%.4e%s",
                    variant.value,
                    rank,
                    traj.n_steps,
                    last.wall_time,
                    sum(rec.wall_K for rec in traj.records),
                    sum(rec.wall_L for rec in traj.records),
                    sum(rec.wall_S for rec in traj.records),
                    phi.max(),
                    "" if in_source else " (不在源区)",
                )
                runs.append(LatticeRun(variant.value, rank, traj, phi))

    summary = pd.DataFrame(summary_rows)
    write_csv(summary, out / "lattice_summary.csv")

    comparison_rows = []
    by_rank: Dict[int, List[Tuple[str, np.ndarray]]] = {}
    for run in runs:
        by_rank.setdefault(run.rank, []).append((run.variant, run.flux))
    for rank, entries in by_rank.items():
        for (va, phi_a), (vb, phi_b) in combinations(entries, 2):
            diff = relative_l2_difference(phi_a, phi_b)
            comparison_rows.append(
                {"rank": rank, "variant_a": va, "variant_b": vb, "rel_l2_diff": diff}
            )
            logger.info("r=%d: %s 与 %s 通量相对 L2 差 %.3e", rank, va, vb, diff)
    comparison = pd.DataFrame(
        comparison_rows, columns=["rank", "variant_a", "variant_b", "rel_l2_diff"]
    )
    write_csv(comparison, out / "lattice_comparison.csv")
    return LatticeResult(runs, summary, comparison, out)
