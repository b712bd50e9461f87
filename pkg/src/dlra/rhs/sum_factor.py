"""
Author: sy.pan
Date: 2026-03-04 09:31:16
LastEditors: sy.pan
LastEditTime: 2026-10-18 11:47:38
FilePath: /dlra_bench/src/dlra/rhs/sum_factor.py
Description:

Copyright (c) 2026 by sy.pan, All Rights Reserved.
"""

"""
结构化右端项 F(t, Y) = sum_l alpha_l(t) C_l Y D_l + sum_j a_j b_j^H

C_l (m x m)、D_l (n x n) 以 CSR 稀疏格式保存；常数源项以秩一对 (a_j, b_j) 保存。
投影形式按因子收缩，不组装稠密 F:
  eval_K = sum alpha C K (V^H D V) + a (b^H V)
  eval_L = sum conj(alpha) D^H L (U^H C U)^H + b (a^H U)
  eval_S = sum alpha (U^H C U) S (V^H D V) + (U^H a)(b^H V)
"""

import hashlib
import logging
import math
import threading
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
from pydantic import BaseModel, ConfigDict, field_validator

from dlra.exceptions import InputError, ShapeMismatchError, StaleCacheError
from dlra.model.records import CostReport
from dlra.rhs.base import MatrixOde, check_finite
from dlra.rhs.cost import cost_estimate
from dlra.utils.enums import ScalarField

logger = logging.getLogger(__name__)

Coefficient = Callable[[float], complex]


def basis_fingerprint(Q: Optional[np.ndarray]) -> Optional[str]:
    """基矩阵指纹（形状 + dtype + 字节内容的 blake2b 摘要）"""
    if Q is None:
        return None
    Q = np.ascontiguousarray(Q)
    h = hashlib.blake2b(digest_size=16)
    h.update(str((Q.shape, Q.dtype.str)).encode())
    h.update(Q.tobytes())
    return h.hexdigest()


class MacCounter:
    """乘加次数计数器（线程安全）"""

    def __init__(self):
        self._lock = threading.Lock()
        self.count = 0

    def add(self, n: int) -> None:
        with self._lock:
            self.count += int(n)

    def reset(self) -> None:
        with self._lock:
            self.count = 0


def _sparse_times(A: sp.csr_matrix, X: np.ndarray, counter: Optional[MacCounter]) -> np.ndarray:
    if counter is not None:
        counter.add(A.nnz * X.shape[1])
    return np.asarray(A @ X)


def _dense_times(A: np.ndarray, B: np.ndarray, counter: Optional[MacCounter]) -> np.ndarray:
    if counter is not None:
        counter.add(A.shape[0] * A.shape[1] * B.shape[1])
    return A @ B


def _right_sparse(Y: np.ndarray, D: sp.csr_matrix) -> np.ndarray:
    """Y @ D，经由 (D^T Y^T)^T 计算，结果为稠密数组"""
    return np.asarray(D.T @ Y.T).T


class SumFactorTerm(BaseModel):
    """单项 alpha(t) C Y D；coefficient 为空表示 alpha ≡ 1（时间无关）"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    C: sp.csr_matrix
    D: sp.csr_matrix
    coefficient: Optional[Coefficient] = None
    label: str = "one"

    @field_validator("C", "D", mode="before")
    @classmethod
    def _as_csr(cls, v):
        if sp.issparse(v):
            return sp.csr_matrix(v)
        arr = np.asarray(v)
        if arr.ndim != 2:
            raise ValueError(f"因子必须是二维矩阵，当前维数: {arr.ndim}")
        return sp.csr_matrix(arr)

    @property
    def time_dependent(self) -> bool:
        return self.coefficient is not None

    def alpha(self, t: float) -> complex:
        return 1.0 if self.coefficient is None else self.coefficient(t)


class SourcePair(BaseModel):
    """常数秩一源项 a b^H"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    a: np.ndarray
    b: np.ndarray

    @field_validator("a", "b", mode="before")
    @classmethod
    def _as_vector(cls, v):
        arr = np.asarray(v).reshape(-1)
        if not np.all(np.isfinite(arr)):
            raise ValueError("源项包含非有限值")
        return arr


class ProjectedFactors(BaseModel):
    """
    一个宏步内的投影因子缓存

    C_proj[l] = U^H C_l U, D_proj[l] = V^H D_l V, a_proj[j] = U^H a_j, b_proj[j] = b_j^H V。
    构造后只读；U / V 可分别缺省（K 步只需要 V 侧）。
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    u_fingerprint: Optional[str] = None
    v_fingerprint: Optional[str] = None
    C_proj: Optional[List[np.ndarray]] = None
    D_proj: Optional[List[np.ndarray]] = None
    a_proj: Optional[List[np.ndarray]] = None
    b_proj: Optional[List[np.ndarray]] = None

    def require_u(self, U_hat: np.ndarray) -> Tuple[List[np.ndarray], List[np.ndarray]]:
        fp = basis_fingerprint(U_hat)
        if self.C_proj is None or fp != self.u_fingerprint:
            raise StaleCacheError(
                "U 侧投影缓存与当前基不匹配",
                detail={"expected": self.u_fingerprint, "actual": fp},
            )
        return self.C_proj, self.a_proj

    def require_v(self, V_hat: np.ndarray) -> Tuple[List[np.ndarray], List[np.ndarray]]:
        fp = basis_fingerprint(V_hat)
        if self.D_proj is None or fp != self.v_fingerprint:
            raise StaleCacheError(
                "V 侧投影缓存与当前基不匹配",
                detail={"expected": self.v_fingerprint, "actual": fp},
            )
        return self.D_proj, self.b_proj


class SumFactorRhs(MatrixOde):
    """
    和式分解右端项

    Args:
        terms: (C_l, D_l) 项列表
        sources: 常数秩一源项
        field: 标量域；为空时由因子 dtype 推断
    """

    def __init__(
        self,
        terms: Sequence[SumFactorTerm],
        sources: Sequence[SourcePair] = (),
        field: Optional[ScalarField] = None,
    ):
        if not terms and not sources:
            raise InputError("SumFactorRhs 至少需要一项")
        if terms:
            m, n = terms[0].C.shape[0], terms[0].D.shape[0]
        else:
            m, n = sources[0].a.shape[0], sources[0].b.shape[0]
        for k, term in enumerate(terms):
            if term.C.shape != (m, m) or term.D.shape != (n, n):
                raise ShapeMismatchError(
                    f"第 {k} 项因子形状不一致: C {term.C.shape}, D {term.D.shape}, 期望 ({m}, {n})"
                )
        for k, src in enumerate(sources):
            if src.a.shape != (m,) or src.b.shape != (n,):
                raise ShapeMismatchError(
                    f"第 {k} 个源项形状不一致: a {src.a.shape}, b {src.b.shape}"
                )
        if field is None:
            arrays = [t.C for t in terms] + [t.D for t in terms]
            arrays += [s.a for s in sources] + [s.b for s in sources]
            complex_ = any(np.iscomplexobj(a.data if sp.issparse(a) else a) for a in arrays)
            field = ScalarField.COMPLEX if complex_ else ScalarField.REAL
        super().__init__(m, n, field)
        self.terms: Tuple[SumFactorTerm, ...] = tuple(terms)
        self.sources: Tuple[SourcePair, ...] = tuple(sources)
        # D^H 在 eval_L 中反复使用，构造时转成 CSR 保存
        self._D_adj = tuple(sp.csr_matrix(t.D.conj().T) for t in self.terms)

    @property
    def n_terms(self) -> int:
        return len(self.terms)

    @property
    def supports_projection_cache(self) -> bool:
        return not any(t.time_dependent for t in self.terms)

    @property
    def sparsity_counts(self) -> Tuple[List[int], List[int]]:
        """每行平均非零元个数 c_l = ceil(nnz(C_l)/m), d_l = ceil(nnz(D_l)/n)"""
        c = [max(1, math.ceil(t.C.nnz / self.m)) for t in self.terms]
        d = [max(1, math.ceil(t.D.nnz / self.n)) for t in self.terms]
        return c, d

    def cost_report(self, r: int, n_ode: int) -> CostReport:
        c, d = self.sparsity_counts
        return cost_estimate(self.m, self.n, r, self.n_terms, c, d, n_ode)

    def source_norm(self) -> float:
        if not self.sources:
            return 0.0
        A = np.column_stack([s.a for s in self.sources])
        B = np.column_stack([s.b for s in self.sources])
        # ||A B^H||_F^2 = trace((A^H A)(B^H B))
        value = np.sum((A.conj().T @ A) * (B.conj().T @ B).T).real
        return float(np.sqrt(max(value, 0.0)))

    def dense_factors(self) -> List[Tuple[np.ndarray, np.ndarray]]:
        """稠密 (C_l, D_l) 列表，供小规模校验使用"""
        return [(t.C.toarray(), t.D.toarray()) for t in self.terms]

    def precompute_projected_factors(
        self, U_hat: Optional[np.ndarray], V_hat: Optional[np.ndarray]
    ) -> ProjectedFactors:
        """
        预计算 U^H C_l U 与 V^H D_l V

        Args:
            U_hat: m x p 正交基，可为 None
            V_hat: n x q 正交基，可为 None

        Returns:
            ProjectedFactors: 只读缓存，按基指纹校验
        """
        if not self.supports_projection_cache:
            raise InputError(
                "存在时间相关系数的项，拒绝预计算投影因子",
                detail={"labels": [t.label for t in self.terms if t.time_dependent]},
            )
        data = {}
        if U_hat is not None:
            self._check_shape(U_hat, self.m, "U_hat")
            Uh = U_hat.conj().T
            data["u_fingerprint"] = basis_fingerprint(U_hat)
            data["C_proj"] = [Uh @ np.asarray(t.C @ U_hat) for t in self.terms]
            data["a_proj"] = [Uh @ s.a for s in self.sources]
        if V_hat is not None:
            self._check_shape(V_hat, self.n, "V_hat")
            Vh = V_hat.conj().T
            data["v_fingerprint"] = basis_fingerprint(V_hat)
            data["D_proj"] = [Vh @ np.asarray(t.D @ V_hat) for t in self.terms]
            data["b_proj"] = [s.b.conj() @ V_hat for s in self.sources]
        return ProjectedFactors(**data)

    def _project_v(self, V_hat, cache, counter):
        if cache is not None:
            return cache.require_v(V_hat)
        Vh = V_hat.conj().T
        D_proj = [_dense_times(Vh, _sparse_times(t.D, V_hat, counter), counter) for t in self.terms]
        b_proj = [s.b.conj() @ V_hat for s in self.sources]
        return D_proj, b_proj

    def _project_u(self, U_hat, cache, counter):
        if cache is not None:
            return cache.require_u(U_hat)
        Uh = U_hat.conj().T
        C_proj = [_dense_times(Uh, _sparse_times(t.C, U_hat, counter), counter) for t in self.terms]
        a_proj = [Uh @ s.a for s in self.sources]
        return C_proj, a_proj

    def _apply(self, t: float, Y: np.ndarray) -> np.ndarray:
        out = np.zeros(Y.shape, dtype=np.result_type(Y, self.dtype))
        for term in self.terms:
            out += term.alpha(t) * _right_sparse(np.asarray(term.C @ Y), term.D)
        for src in self.sources:
            out += np.outer(src.a, src.b.conj())
        return out

    def eval_K(self, t, K, V_hat, cache: Optional[ProjectedFactors] = None, counter=None):
        self._check_shape(K, self.m, "K")
        self._check_shape(V_hat, self.n, "V_hat")
        if K.shape[1] != V_hat.shape[1]:
            raise ShapeMismatchError(f"K {K.shape} 与 V_hat {V_hat.shape} 列数不一致")
        D_proj, b_proj = self._project_v(V_hat, cache, counter)
        out = np.zeros(K.shape, dtype=np.result_type(K, V_hat, self.dtype))
        for term, Dp in zip(self.terms, D_proj):
            CK = _sparse_times(term.C, K, counter)
            out += term.alpha(t) * _dense_times(CK, Dp, counter)
        for src, bp in zip(self.sources, b_proj):
            out += np.outer(src.a, bp)
        return check_finite(out, "eval_K")

    def eval_L(self, t, L, U_hat, cache: Optional[ProjectedFactors] = None, counter=None):
        self._check_shape(L, self.n, "L")
        self._check_shape(U_hat, self.m, "U_hat")
        if L.shape[1] != U_hat.shape[1]:
            raise ShapeMismatchError(f"L {L.shape} 与 U_hat {U_hat.shape} 列数不一致")
        C_proj, a_proj = self._project_u(U_hat, cache, counter)
        out = np.zeros(L.shape, dtype=np.result_type(L, U_hat, self.dtype))
        for term, D_adj, Cp in zip(self.terms, self._D_adj, C_proj):
            DL = _sparse_times(D_adj, L, counter)
            out += np.conj(term.alpha(t)) * _dense_times(DL, Cp.conj().T, counter)
        for src, ap in zip(self.sources, a_proj):
            out += np.outer(src.b, ap.conj())
        return check_finite(out, "eval_L")

    def eval_S(
        self, t, S, U_hat, V_hat, cache: Optional[ProjectedFactors] = None, counter=None
    ):
        self._check_shape(U_hat, self.m, "U_hat")
        self._check_shape(V_hat, self.n, "V_hat")
        if S.shape != (U_hat.shape[1], V_hat.shape[1]):
            raise ShapeMismatchError(
                f"S {S.shape} 与基宽度 ({U_hat.shape[1]}, {V_hat.shape[1]}) 不一致"
            )
        C_proj, a_proj = self._project_u(U_hat, cache, counter)
        D_proj, b_proj = self._project_v(V_hat, cache, counter)
        out = np.zeros(S.shape, dtype=np.result_type(S, U_hat, V_hat, self.dtype))
        for term, Cp, Dp in zip(self.terms, C_proj, D_proj):
            out += term.alpha(t) * _dense_times(_dense_times(Cp, S, counter), Dp, counter)
        for ap, bp in zip(a_proj, b_proj):
            out += np.outer(ap, bp)
        return check_finite(out, "eval_S")
