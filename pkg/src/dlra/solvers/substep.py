"""
Author: sy.pan
Date: 2026-03-05 15:08:44
LastEditors: sy.pan
LastEditTime: 2026-09-29 19:12:55
FilePath: /dlra_bench/src/dlra/solvers/substep.py
Description:

Copyright (c) 2026 by sy.pan, All Rights Reserved.
"""

"""
子步 ODE 求解器

在一个宏步 [t0, t1] 上积分 K/L/S 子步方程 dY/dt = rhs(t, Y)，Y 为稠密矩阵。
  - heun: 显式梯形（两级）
  - rk4: 经典四级 Runge-Kutta
  - embedded45: Dormand-Prince 5(4) 嵌入对 + PI 步长控制
"""

import logging
import time
from typing import Callable, Tuple

import numpy as np

from dlra.exceptions import InputError, IntegrationFailure
from dlra.model.records import SubstepStats
from dlra.model.solver_config import SolverConfig
from dlra.utils.enums import SolverMethod

logger = logging.getLogger(__name__)

Rhs = Callable[[float, np.ndarray], np.ndarray]

# Dormand-Prince 5(4) Butcher 表
_DP_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_DP_B = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
# 五阶与嵌入四阶权重之差
_DP_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)

# PI 控制器指数（误差阶 5）
_PI_ALPHA = 0.7 / 5
_PI_BETA = 0.4 / 5


def _ensure_finite(Y: np.ndarray, t: float, stats: SubstepStats) -> None:
    if not np.all(np.isfinite(Y)):
        raise IntegrationFailure(
            "子步积分出现非有限中间值",
            detail={"t": t, "method": stats.method.value, "n_steps": stats.n_steps},
        )


def _heun(rhs: Rhs, Y0: np.ndarray, t0: float, t1: float, config: SolverConfig, stats):
    h = (t1 - t0) / config.substeps
    Y = Y0
    for k in range(config.substeps):
        t = t0 + k * h
        f0 = rhs(t, Y)
        f1 = rhs(t + h, Y + h * f0)
        Y = Y + 0.5 * h * (f0 + f1)
        stats.n_rhs_evals += 2
        stats.n_steps += 1
        _ensure_finite(Y, t + h, stats)
    return Y


def _rk4(rhs: Rhs, Y0: np.ndarray, t0: float, t1: float, config: SolverConfig, stats):
    h = (t1 - t0) / config.substeps
    Y = Y0
    for k in range(config.substeps):
        t = t0 + k * h
        k1 = rhs(t, Y)
        k2 = rhs(t + 0.5 * h, Y + 0.5 * h * k1)
        k3 = rhs(t + 0.5 * h, Y + 0.5 * h * k2)
        k4 = rhs(t + h, Y + h * k3)
        Y = Y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        stats.n_rhs_evals += 4
        stats.n_steps += 1
        _ensure_finite(Y, t + h, stats)
    return Y


def _error_norm(err: np.ndarray, Y_old: np.ndarray, Y_new: np.ndarray, config) -> float:
    """逐元素按 atol + rtol * max(|y_old|, |y_new|) 缩放后的均方根"""
    scale = config.atol + config.rtol * np.maximum(np.abs(Y_old), np.abs(Y_new))
    return float(np.sqrt(np.mean(np.abs(err / scale) ** 2)))


def _initial_step(rhs_f0: np.ndarray, Y0: np.ndarray, span: float, config) -> float:
    scale = config.atol + config.rtol * np.abs(Y0)
    d0 = float(np.sqrt(np.mean(np.abs(Y0 / scale) ** 2)))
    d1 = float(np.sqrt(np.mean(np.abs(rhs_f0 / scale) ** 2)))
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6 * span
    else:
        h0 = 0.01 * d0 / d1
    return min(max(h0, 1e-12 * span), span)


def _embedded45(rhs: Rhs, Y0: np.ndarray, t0: float, t1: float, config: SolverConfig, stats):
    span = t1 - t0
    t = t0
    Y = Y0
    f = rhs(t, Y)
    stats.n_rhs_evals += 1
    h = _initial_step(f, Y, span, config)
    err_prev = 1.0

    while t < t1:
        if stats.n_steps + stats.n_rejected >= config.max_steps:
            raise IntegrationFailure(
                f"子步积分超过最大步数 {config.max_steps}",
                detail={"t": t, "t1": t1, "h": h, "n_steps": stats.n_steps},
            )
        last = t + h >= t1 - 1e-14 * max(1.0, abs(t1))
        if last:
            h = t1 - t

        stages = [f]
        for i in range(1, 7):
            incr = sum(a * k for a, k in zip(_DP_A[i], stages) if a != 0.0)
            stages.append(rhs(t + _DP_C[i] * h, Y + h * incr))
        stats.n_rhs_evals += 6
        # 第 7 级即 Y_new 处的导数
        Y_new = Y + h * sum(b * k for b, k in zip(_DP_B, stages) if b != 0.0)
        _ensure_finite(Y_new, t + h, stats)
        err = h * sum(e * k for e, k in zip(_DP_E, stages) if e != 0.0)
        err_norm = _error_norm(err, Y, Y_new, config)

        if err_norm <= 1.0:
            t = t1 if last else t + h
            Y = Y_new
            f = stages[6]
            stats.n_steps += 1
            if err_norm == 0.0:
                factor = config.max_factor
            else:
                factor = config.safety * err_norm**-_PI_ALPHA * err_prev**_PI_BETA
            err_prev = max(err_norm, 1e-4)
            h *= min(config.max_factor, max(config.min_factor, factor))
        else:
            stats.n_rejected += 1
            factor = config.safety * err_norm ** (-1 / 5)
            h *= min(1.0, max(config.min_factor, factor))
    return Y


_METHODS = {
    SolverMethod.HEUN: _heun,
    SolverMethod.RK4: _rk4,
    SolverMethod.EMBEDDED45: _embedded45,
}


def integrate_with_stats(
    rhs: Rhs, Y0: np.ndarray, t0: float, t1: float, config: SolverConfig
) -> Tuple[np.ndarray, SubstepStats]:
    """
    在 [t0, t1] 上积分矩阵 ODE

    Args:
        rhs: 右端项 (t, Y) -> dY
        Y0: 初值（稠密矩阵）
        t0, t1: 积分区间, t1 > t0
        config: 求解器配置

    Returns:
        Tuple[np.ndarray, SubstepStats]: (Y(t1), 统计信息)
    """
    if not t1 > t0:
        raise InputError(f"积分区间非法: t0={t0}, t1={t1}")
    Y0 = np.asarray(Y0)
    if not np.all(np.isfinite(Y0)):
        raise InputError("子步初值包含非有限值")

    stats = SubstepStats(method=config.method)
    start = time.perf_counter()
    Y1 = _METHODS[config.method](rhs, Y0, t0, t1, config, stats)
    stats.wall_time = time.perf_counter() - start
    logger.debug(
        "子步积分 %s [%.6g, %.6g]: %d 步, %d 次拒绝, %d 次求值",
        config.method.value,
        t0,
        t1,
        stats.n_steps,
        stats.n_rejected,
        stats.n_rhs_evals,
    )
    return Y1, stats


def integrate(rhs: Rhs, Y0: np.ndarray, t0: float, t1: float, config: SolverConfig) -> np.ndarray:
    """integrate_with_stats 的简化版本，仅返回 Y(t1)"""
    Y1, _ = integrate_with_stats(rhs, Y0, t0, t1, config)
    return Y1
