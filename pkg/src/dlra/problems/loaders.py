"""
问题定义文件读取

YAML 格式:
  m: 30
  n: 20
  field: real            # 或 complex
  terms:
    - C: c1.txt          # 三元组文件，相对 YAML 所在目录
      D: d1.txt
      coefficient: one   # one | cos | sin | exp_decay
  sources:
    - a: a.txt           # 向量文件，每行 `value [imag]`
      b: b.txt
  initial:
    rank: 5
    seed: 0

三元组文件每行 `row col value [imag]`，下标从 0 开始，# 开头为注释。
"""

import logging
from pathlib import Path
from typing import Callable, Dict, List, NamedTuple, Optional, Union

import numpy as np
import pandas as pd
import scipy.sparse as sp
import yaml
from pydantic import BaseModel, Field, ValidationError

from dlra.core.lowrank import random_lowrank
from dlra.exceptions import ConfigError
from dlra.model.lowrank_state import LowRankState
from dlra.rhs.sum_factor import SourcePair, SumFactorRhs, SumFactorTerm
from dlra.utils.enums import ScalarField

logger = logging.getLogger(__name__)

COEFFICIENTS: Dict[str, Optional[Callable[[float], float]]] = {
    "one": None,
    "cos": np.cos,
    "sin": np.sin,
    "exp_decay": lambda t: float(np.exp(-t)),
}


class TermEntry(BaseModel):
    C: Path
    D: Path
    coefficient: str = "one"


class SourceEntry(BaseModel):
    a: Path
    b: Path


class InitialEntry(BaseModel):
    rank: int = Field(default=1, ge=1)
    seed: int = Field(default=0, ge=0)


class ProblemFile(BaseModel):
    """问题定义文件的结构"""

    m: int = Field(..., ge=1)
    n: int = Field(..., ge=1)
    field: ScalarField = ScalarField.REAL
    terms: List[TermEntry] = Field(default_factory=list)
    sources: List[SourceEntry] = Field(default_factory=list)
    initial: InitialEntry = Field(default_factory=InitialEntry)


class LoadedProblem(NamedTuple):
    rhs: SumFactorRhs
    initial: LowRankState
    definition: ProblemFile


def _read_table(path: Path, min_cols: int, max_cols: int) -> pd.DataFrame:
    if not path.exists():
        raise ConfigError(f"数据文件不存在: {path}")
    try:
        df = pd.read_csv(path, sep=r"\s+", comment="#", header=None, engine="python")
    except pd.errors.EmptyDataError:
        return pd.DataFrame(np.zeros((0, min_cols)))
    except (pd.errors.ParserError, ValueError) as e:
        raise ConfigError(f"数据文件解析失败: {path}", detail={"reason": str(e)})
    if not min_cols <= df.shape[1] <= max_cols:
        raise ConfigError(f"{path} 每行应有 {min_cols}-{max_cols} 列，当前 {df.shape[1]} 列")
    if df.isnull().values.any():
        raise ConfigError(f"{path} 存在缺列的行")
    return df


def read_triplets(path: Union[str, Path], shape: tuple[int, int]) -> sp.csr_matrix:
    """
    读取三元组文件为 CSR 矩阵，重复下标按求和处理

    Args:
        path: 文件路径
        shape: 矩阵形状

    Returns:
        sp.csr_matrix: 稀疏矩阵
    """
    path = Path(path)
    df = _read_table(path, 3, 4)
    rows = df.iloc[:, 0].to_numpy(dtype=int)
    cols = df.iloc[:, 1].to_numpy(dtype=int)
    values = df.iloc[:, 2].to_numpy(dtype=float)
    if df.shape[1] == 4:
        values = values + 1j * df.iloc[:, 3].to_numpy(dtype=float)
    in_range = (rows >= 0) & (rows < shape[0]) & (cols >= 0) & (cols < shape[1])
    if not np.all(in_range):
        raise ConfigError(f"{path} 下标越界，矩阵形状 {shape}")
    return sp.csr_matrix(sp.coo_matrix((values, (rows, cols)), shape=shape))


def read_vector(path: Union[str, Path], length: int) -> np.ndarray:
    path = Path(path)
    df = _read_table(path, 1, 2)
    values = df.iloc[:, 0].to_numpy(dtype=float)
    if df.shape[1] == 2:
        values = values + 1j * df.iloc[:, 1].to_numpy(dtype=float)
    if values.shape != (length,):
        raise ConfigError(f"{path} 长度应为 {length}，当前 {values.shape[0]}")
    return values


def load_problem_file(path: Union[str, Path]) -> LoadedProblem:
    """
    读取 YAML 问题定义并组装 SumFactorRhs

    Args:
        path: YAML 文件路径

    Returns:
        LoadedProblem: (右端项, 随机低秩初值, 文件内容)
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"问题定义文件不存在: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}
        definition = ProblemFile(**data)
    except yaml.YAMLError as e:
        raise ConfigError(f"问题定义文件解析失败: {path}", detail={"reason": str(e)})
    except ValidationError as e:
        raise ConfigError(
            f"问题定义文件校验失败: {path}", detail={"errors": e.errors(include_url=False)}
        )

    base = path.parent
    m, n = definition.m, definition.n
    terms = []
    for k, entry in enumerate(definition.terms):
        if entry.coefficient not in COEFFICIENTS:
            raise ConfigError(
                f"第 {k} 项的系数标识未知: {entry.coefficient}",
                detail={"known": sorted(COEFFICIENTS)},
            )
        terms.append(
            SumFactorTerm(
                C=read_triplets(base / entry.C, (m, m)),
                D=read_triplets(base / entry.D, (n, n)),
                coefficient=COEFFICIENTS[entry.coefficient],
                label=entry.coefficient,
            )
        )
    sources = [
        SourcePair(a=read_vector(base / s.a, m), b=read_vector(base / s.b, n))
        for s in definition.sources
    ]
    if not terms and not sources:
        raise ConfigError(f"问题定义文件没有任何项: {path}")
    rhs = SumFactorRhs(terms, sources)
    if rhs.field is ScalarField.COMPLEX and definition.field is ScalarField.REAL:
        raise ConfigError(f"{path} 声明为实数问题，但因子包含复数值")
    if definition.field is ScalarField.COMPLEX:
        rhs.field = ScalarField.COMPLEX

    rank = min(definition.initial.rank, m, n)
    initial = random_lowrank(m, n, rank, seed=definition.initial.seed, field=definition.field)
    logger.info("读取问题定义 %s: %d x %d, %d 项, %d 个源项", path, m, n, len(terms), len(sources))
    return LoadedProblem(rhs=rhs, initial=initial, definition=definition)
