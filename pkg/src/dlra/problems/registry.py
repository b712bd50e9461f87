"""
按 ProblemSpec 构造基准问题
"""

import logging
from typing import Callable, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict

from dlra.exceptions import ConfigError
from dlra.model.experiment import ProblemSpec
from dlra.model.lowrank_state import LowRankState
from dlra.problems.lattice import (
    LatticeProblem,
    default_lattice_layout,
    lattice_build,
    load_lattice_overrides,
)
from dlra.problems.loaders import load_problem_file
from dlra.problems.schrodinger import (
    schrodinger_build,
    schrodinger_full_initial,
    schrodinger_initial,
)
from dlra.problems.synthetic import synthetic_exact
from dlra.rhs.base import MatrixOde
from dlra.utils.enums import ProblemKind

logger = logging.getLogger(__name__)


class BenchmarkProblem(BaseModel):
    """
    一次运行所需的问题数据

    initial 为低秩初值，reference_initial 为参考解使用的稠密初值（Schrödinger 为满秩 A0），
    exact 为闭式解（仅标定问题）。
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    spec: ProblemSpec
    rhs: MatrixOde
    initial: LowRankState
    reference_initial: np.ndarray
    exact: Optional[Callable[[float], np.ndarray]] = None
    lattice: Optional[LatticeProblem] = None


def build_problem(spec: ProblemSpec, rank: int, seed: int = 0) -> BenchmarkProblem:
    """
    构造问题与秩为 rank 的初值

    Args:
        spec: 问题参数
        rank: 运行秩
        seed: 随机种子

    Returns:
        BenchmarkProblem: 问题数据
    """
    if spec.kind is ProblemKind.SCHRODINGER:
        return BenchmarkProblem(
            spec=spec,
            rhs=schrodinger_build(spec.n),
            initial=schrodinger_initial(spec.n, rank, seed),
            reference_initial=schrodinger_full_initial(spec.n, seed),
        )

    if spec.kind is ProblemKind.SYNTHETIC:
        synthetic = synthetic_exact(
            spec.m, spec.n, spec.exact_rank, spec.synthetic_kind, seed=seed, law=spec.law
        )
        return BenchmarkProblem(
            spec=spec,
            rhs=synthetic.rhs,
            initial=synthetic.initial,
            reference_initial=synthetic.initial.dense(),
            exact=synthetic.exact,
        )

    if spec.kind is ProblemKind.LATTICE:
        layout = default_lattice_layout()
        if spec.overrides is not None:
            layout = load_lattice_overrides(spec.overrides, layout)
        lattice = lattice_build(spec.n_xy, spec.moment_order, layout=layout)
        return BenchmarkProblem(
            spec=spec,
            rhs=lattice.rhs,
            initial=lattice.initial_state(rank),
            reference_initial=lattice.initial_dense(),
            lattice=lattice,
        )

    if spec.kind is ProblemKind.FILE:
        if spec.path is None:
            raise ConfigError("kind=file 需要 problem.path")
        loaded = load_problem_file(spec.path)
        return BenchmarkProblem(
            spec=spec,
            rhs=loaded.rhs,
            initial=loaded.initial,
            reference_initial=loaded.initial.dense(),
        )

    raise ConfigError(f"未知的问题类型: {spec.kind}")
