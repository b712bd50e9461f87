"""
参考解服务
对完整矩阵 ODE 做稠密 embedded45 积分，结果按配置哈希缓存到磁盘
"""

import logging
from pathlib import Path
from typing import Optional, Union

import numpy as np

from dlra.model.solver_config import SolverConfig
from dlra.problems.registry import BenchmarkProblem
from dlra.solvers.substep import integrate_with_stats
from dlra.utils.enums import ProblemKind, SolverMethod
from dlra.utils.io_utils import config_hash

logger = logging.getLogger(__name__)

# 缓存格式变化时递增
CACHE_VERSION = 1


class ReferenceCache:
    """参考解磁盘缓存（.npy，文件名为配置哈希）"""

    def __init__(self, cache_dir: Union[str, Path]):
        self.cache_dir = Path(cache_dir)
        self.cache_dir.mkdir(parents=True, exist_ok=True)

    def path_for(self, key: str) -> Path:
        return self.cache_dir / f"reference_{key[:24]}.npy"

    def load(self, key: str) -> Optional[np.ndarray]:
        path = self.path_for(key)
        if not path.exists():
            return None
        try:
            return np.load(path, allow_pickle=False)
        except (OSError, ValueError) as e:
            logger.warning("参考解缓存损坏，重新计算: %s (%s)", path, e)
            return None

    def save(self, key: str, value: np.ndarray) -> Path:
        path = self.path_for(key)
        # 先写临时文件再改名，避免中断后留下半个文件
        tmp = path.with_name(path.stem + ".tmp.npy")
        np.save(tmp, value, allow_pickle=False)
        tmp.replace(path)
        return path


def reference_key(problem: BenchmarkProblem, T: float, rtol: float, atol: float, seed: int) -> str:
    return config_hash(
        {"version": CACHE_VERSION}, problem.spec, {"T": T, "rtol": rtol, "atol": atol, "seed": seed}
    )


def reference_solution(
    problem: BenchmarkProblem,
    T: float,
    rtol: float = 1e-10,
    atol: float = 1e-10,
    max_steps: int = 1_000_000,
    cache_dir: Optional[Union[str, Path]] = None,
    seed: int = 0,
) -> np.ndarray:
    """
    计算 A_ref(t0 + T)

    Args:
        problem: 基准问题，从 reference_initial 出发积分
        T: 演化时长
        rtol / atol: embedded45 容差
        max_steps: 步数上限，超出时抛出 IntegrationFailure
        cache_dir: 缓存目录，None 表示不缓存
        seed: 构造问题所用的种子（参与缓存键）

    Returns:
        np.ndarray: 稠密参考解
    """
    # 文件问题的因子在外部文件里，配置哈希覆盖不到，不缓存
    cache = None
    if cache_dir is not None and problem.spec.kind is not ProblemKind.FILE:
        cache = ReferenceCache(cache_dir)
    key = reference_key(problem, T, rtol, atol, seed)

    if cache is not None:
        cached = cache.load(key)
        if cached is not None:
            logger.info("使用缓存参考解 %s", cache.path_for(key))
            return cached

    rhs = problem.rhs
    t0 = problem.initial.t
    Y0 = np.asarray(problem.reference_initial).astype(rhs.dtype)
    config = SolverConfig(
        method=SolverMethod.EMBEDDED45, rtol=rtol, atol=atol, max_steps=max_steps
    )
    logger.info(
        "计算参考解: %s, %d x %d, T=%.6g, rtol=%g, atol=%g",
        problem.spec.kind.value,
        *rhs.shape,
        T,
        rtol,
        atol,
    )
    Y_ref, stats = integrate_with_stats(rhs, Y0, t0, t0 + T, config)
    logger.info(
        "参考解完成: %d 步, %d 次拒绝, %.2f s", stats.n_steps, stats.n_rejected, stats.wall_time
    )

    if cache is not None:
        path = cache.save(key, Y_ref)
        logger.info("参考解已缓存 %s", path)
    return Y_ref
