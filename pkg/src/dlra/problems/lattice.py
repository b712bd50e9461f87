"""
Author: sy.pan
Date: 2026-04-13 13:45:58
LastEditors: sy.pan
LastEditTime: 2026-09-30 09:17:06
FilePath: /dlra_bench/src/dlra/problems/lattice.py
Description:

Copyright (c) 2026 by sy.pan, All Rights Reserved.
"""

"""
二维 lattice 辐射输运问题（P_N 角向离散）

区域 [0,7]^2 划分为 7 x 7 个单位块，空间网格每方向 n_xy 个单元，
单元编号 p = ix * n_y + iy。矩矩阵 Y 为 (n_x n_y) x (N+1)^2:

  F(Y) = -D_x Y A_x^T - D_y Y A_y^T + D_x^s Y |A_x|^T + D_y^s Y |A_y|^T
         - diag(sigma_a) Y + diag(sigma_s) Y G + q e_0^T

D 为中心差分，D^s = tridiag(1,-2,1)/(2 dx) 为 Lax-Friedrichs 型稳定项，边界取零入流虚单元。
"""

import logging
from pathlib import Path
from typing import Optional, Union

import numpy as np
import pandas as pd
import scipy.sparse as sp
from pydantic import BaseModel, ConfigDict, Field, field_validator

from dlra.core.lowrank import lowrank_from_dense
from dlra.exceptions import ConfigError, InputError, NumericalError
from dlra.model.lowrank_state import LowRankState, TruncationPolicy
from dlra.problems.pn_moments import PnFluxMatrices, n_moments, pn_flux_matrices
from dlra.rhs.sum_factor import SourcePair, SumFactorRhs, SumFactorTerm

logger = logging.getLogger(__name__)

N_BLOCKS = 7
DOMAIN_LENGTH = 7.0
SQRT_4PI = float(np.sqrt(4.0 * np.pi))


class LatticeLayout(BaseModel):
    """7 x 7 块的截面与源项，下标为 [块行 (x), 块列 (y)]"""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    sigma_s: np.ndarray
    sigma_a: np.ndarray
    source: np.ndarray

    @field_validator("sigma_s", "sigma_a", "source", mode="before")
    @classmethod
    def _as_block_field(cls, v):
        arr = np.array(v, dtype=float)
        if arr.shape != (N_BLOCKS, N_BLOCKS):
            raise ValueError(f"块场形状必须为 (7, 7)，当前: {arr.shape}")
        if np.any(arr < 0) or not np.all(np.isfinite(arr)):
            raise ValueError("截面与源项必须为非负有限值")
        return arr

    @classmethod
    def zeros(cls) -> "LatticeLayout":
        z = np.zeros((N_BLOCKS, N_BLOCKS))
        return cls(sigma_s=z, sigma_a=z, source=z)


def default_lattice_layout() -> LatticeLayout:
    """
    标准 lattice 布局

    吸收块 (sigma_a = 10, sigma_s = 0): {1 <= i,j <= 5, i+j 为偶数} 去掉中心 (3, 3)；
    中心块 sigma_a = 10, Q = 1；其余块 sigma_s = 1。
    """
    sigma_s = np.ones((N_BLOCKS, N_BLOCKS))
    sigma_a = np.zeros((N_BLOCKS, N_BLOCKS))
    source = np.zeros((N_BLOCKS, N_BLOCKS))
    for i in range(1, 6):
        for j in range(1, 6):
            if (i + j) % 2 == 0:
                sigma_s[i, j] = 0.0
                sigma_a[i, j] = 10.0
    source[3, 3] = 1.0
    return LatticeLayout(sigma_s=sigma_s, sigma_a=sigma_a, source=source)


def load_lattice_overrides(path: Union[str, Path], layout: Optional[LatticeLayout] = None):
    """
    读取截面覆盖文件，每行 `block_row block_col sigma_s sigma_a Q`（空白或逗号分隔，# 为注释）

    Returns:
        LatticeLayout: 覆盖后的布局
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"lattice 覆盖文件不存在: {path}")
    layout = layout or default_lattice_layout()
    try:
        df = pd.read_csv(
            path,
            sep=r"[,\s]+",
            comment="#",
            header=None,
            names=["block_row", "block_col", "sigma_s", "sigma_a", "Q"],
            engine="python",
            skip_blank_lines=True,
        )
    except (pd.errors.ParserError, pd.errors.EmptyDataError, ValueError) as e:
        raise ConfigError(f"lattice 覆盖文件解析失败: {path}", detail={"reason": str(e)})
    if df.isnull().values.any():
        raise ConfigError(f"lattice 覆盖文件存在缺列的行: {path}")

    sigma_s = layout.sigma_s.copy()
    sigma_a = layout.sigma_a.copy()
    source = layout.source.copy()
    for row in df.itertuples(index=False):
        i, j = int(row.block_row), int(row.block_col)
        if not (0 <= i < N_BLOCKS and 0 <= j < N_BLOCKS):
            raise ConfigError(f"块下标越界: ({i}, {j})")
        sigma_s[i, j], sigma_a[i, j], source[i, j] = row.sigma_s, row.sigma_a, row.Q
    logger.info("从 %s 读取 %d 条 lattice 截面覆盖", path, len(df))
    try:
        return LatticeLayout(sigma_s=sigma_s, sigma_a=sigma_a, source=source)
    except ValueError as e:
        raise ConfigError("lattice 覆盖值非法", detail={"reason": str(e)})


def _difference_operators(n: int, dx: float):
    """一维中心差分与稳定项，零虚单元边界"""
    off = np.ones(n - 1)
    central = sp.diags([-off, off], [-1, 1], shape=(n, n)) / (2.0 * dx)
    stab = sp.diags([off, -2.0 * np.ones(n), off], [-1, 0, 1], shape=(n, n)) / (2.0 * dx)
    return sp.csr_matrix(central), sp.csr_matrix(stab)


class LatticeProblem(BaseModel):
    """组装好的 lattice 问题，构造后只读"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    n_xy: int
    N: int
    dx: float
    sigma_s: np.ndarray = Field(..., description="逐单元散射截面 (n_cells,)")
    sigma_a: np.ndarray = Field(..., description="逐单元吸收截面 (n_cells,)")
    source: np.ndarray = Field(..., description="逐单元源强 Q (n_cells,)")
    pn: PnFluxMatrices
    rhs: SumFactorRhs
    background: float = 1e-9

    @property
    def n_cells(self) -> int:
        return self.n_xy * self.n_xy

    @property
    def sigma_t(self) -> np.ndarray:
        return self.sigma_a + self.sigma_s

    def cell_centers(self) -> np.ndarray:
        return (np.arange(self.n_xy) + 0.5) * self.dx

    def block_of_cells(self) -> np.ndarray:
        """每个单元所在块 (bx, by)，形状 (n_cells, 2)"""
        per_block = self.n_xy // N_BLOCKS
        ix, iy = np.divmod(np.arange(self.n_cells), self.n_xy)
        return np.column_stack([ix // per_block, iy // per_block])

    def source_block_mask(self) -> np.ndarray:
        """源项所在单元的 n_x x n_y 掩码"""
        return (self.source > 0).reshape(self.n_xy, self.n_xy)

    def time_step(self, cfl: float) -> float:
        return cfl * self.dx

    def initial_dense(self) -> np.ndarray:
        """各向同性背景 f = background，只有零阶矩非零"""
        Y0 = np.zeros((self.n_cells, n_moments(self.N)))
        Y0[:, 0] = self.background * SQRT_4PI
        return Y0

    def initial_state(self, rank: int) -> LowRankState:
        return lowrank_from_dense(self.initial_dense(), TruncationPolicy.fixed(rank))


def lattice_build(
    n_xy: int,
    N: int,
    layout: Optional[LatticeLayout] = None,
    background: float = 1e-9,
) -> LatticeProblem:
    """
    组装 lattice 问题

    Args:
        n_xy: 每方向单元数，必须是 7 的倍数
        N: P_N 阶数
        layout: 块截面布局，缺省为标准 lattice 布局
        background: 初始各向同性背景

    Returns:
        LatticeProblem: 含 SumFactorRhs 的问题对象
    """
    if n_xy < N_BLOCKS or n_xy % N_BLOCKS != 0:
        raise InputError(f"n_xy 必须是 7 的正整数倍，当前: {n_xy}")
    layout = layout or default_lattice_layout()
    pn = pn_flux_matrices(N)
    dx = DOMAIN_LENGTH / n_xy

    per_block = n_xy // N_BLOCKS
    ix, iy = np.divmod(np.arange(n_xy * n_xy), n_xy)
    bx, by = ix // per_block, iy // per_block
    sigma_s = layout.sigma_s[bx, by]
    sigma_a = layout.sigma_a[bx, by]
    source = layout.source[bx, by]

    central, stab = _difference_operators(n_xy, dx)
    eye = sp.identity(n_xy, format="csr")
    D_x, D_y = sp.kron(central, eye), sp.kron(eye, central)
    S_x, S_y = sp.kron(stab, eye), sp.kron(eye, stab)
    eye_moments = sp.identity(n_moments(N), format="csr")

    terms = [
        SumFactorTerm(C=-D_x, D=pn.A_x.T, label="advection_x"),
        SumFactorTerm(C=-D_y, D=pn.A_y.T, label="advection_y"),
        SumFactorTerm(C=S_x, D=pn.abs_A_x.T, label="stabilization_x"),
        SumFactorTerm(C=S_y, D=pn.abs_A_y.T, label="stabilization_y"),
        SumFactorTerm(C=sp.diags(-sigma_a), D=eye_moments, label="absorption"),
        SumFactorTerm(C=sp.diags(sigma_s), D=pn.G, label="scattering"),
    ]
    sources = []
    if np.any(source > 0):
        e0 = np.zeros(n_moments(N))
        e0[0] = 1.0
        sources.append(SourcePair(a=SQRT_4PI * source, b=e0))
    rhs = SumFactorRhs(terms, sources)

    logger.info(
        "lattice 问题: %d x %d 单元, P_%d (%d 个矩), dx=%.4g, 吸收单元 %d",
        n_xy,
        n_xy,
        N,
        n_moments(N),
        dx,
        int(np.count_nonzero(sigma_a > 0)),
    )
    return LatticeProblem(
        n_xy=n_xy,
        N=N,
        dx=dx,
        sigma_s=sigma_s,
        sigma_a=sigma_a,
        source=source,
        pn=pn,
        rhs=rhs,
        background=background,
    )


def lattice_scalar_flux(Y: Union[np.ndarray, LowRankState], problem: LatticeProblem) -> np.ndarray:
    """
    标量通量 Phi = sqrt(4 pi) * 零阶矩，整形为 n_x x n_y

    Args:
        Y: 稠密矩矩阵或低秩状态
        problem: lattice 问题

    Returns:
        np.ndarray: n_x x n_y 场
    """
    if isinstance(Y, LowRankState):
        column = Y.U @ (Y.S @ Y.V[0, :].conj())
    else:
        Y = np.asarray(Y)
        if Y.shape != (problem.n_cells, n_moments(problem.N)):
            raise InputError(f"矩矩阵形状 {Y.shape} 与问题不一致")
        column = Y[:, 0]
    phi = SQRT_4PI * np.real(column).reshape(problem.n_xy, problem.n_xy)
    if not np.all(np.isfinite(phi)):
        raise NumericalError("标量通量包含非有限值")
    return phi
