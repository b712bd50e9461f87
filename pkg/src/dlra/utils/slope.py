"""
收敛阶拟合

在 (log h, log err) 上做最小二乘。h 从大到小排列后，若末端局部斜率低于
FLOOR_SLOPE，则认为误差曲线到达平台: 平台值取最小误差，误差不超过
FLOOR_MARGIN 倍平台值的点不参与拟合，并在结果中标记。
调用方也可给出已知下界（如参考解的最佳秩 r 逼近误差），按同一倍数剔除。
"""

import logging
from typing import List, Sequence

import numpy as np
from pydantic import BaseModel

from dlra.exceptions import InputError

logger = logging.getLogger(__name__)

FLOOR_SLOPE = 0.5
FLOOR_MARGIN = 10.0


class SlopeFit(BaseModel):
    slope: float
    intercept: float
    residual: float
    points_used: int
    floor_flagged: bool = False


def local_slopes(h: Sequence[float], err: Sequence[float]) -> List[float]:
    """相邻点的局部斜率，第一个点为 nan；输入顺序保持不变"""
    h = np.asarray(h, dtype=float)
    err = np.asarray(err, dtype=float)
    out = [float("nan")]
    for k in range(1, len(h)):
        if err[k] > 0 and err[k - 1] > 0 and h[k] != h[k - 1]:
            out.append(float(np.log(err[k] / err[k - 1]) / np.log(h[k] / h[k - 1])))
        else:
            out.append(float("nan"))
    return out


def _least_squares(x: np.ndarray, y: np.ndarray):
    A = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    residual = float(np.linalg.norm(A @ coef - y))
    return float(coef[0]), float(coef[1]), residual


def fit_slope(h: Sequence[float], err: Sequence[float], floor: float | None = None) -> SlopeFit:
    """
    拟合 log err = slope * log h + intercept

    Args:
        h: 步长（至少 3 个，正数）
        err: 对应误差（正数）
        floor: 已知的误差下界（如最佳秩 r 逼近误差），不超过其 FLOOR_MARGIN 倍的点不参与拟合

    Returns:
        SlopeFit: 斜率、截距、残差、参与拟合的点数与平台标记
    """
    h = np.asarray(h, dtype=float)
    err = np.asarray(err, dtype=float)
    if h.shape != err.shape or h.ndim != 1:
        raise InputError(f"h 与 err 形状不一致: {h.shape} vs {err.shape}")
    if h.size < 3:
        raise InputError(f"拟合斜率至少需要 3 个点，当前 {h.size} 个")
    if np.any(h <= 0) or np.any(err <= 0) or not np.all(np.isfinite(err)):
        raise InputError("h 与 err 必须为正的有限值")
    if floor is not None and floor < 0:
        raise InputError(f"误差下界必须非负，当前: {floor}")

    order = np.argsort(-h)
    h, err = h[order], err[order]
    slopes = local_slopes(h, err)

    level = float(floor or 0.0)
    flagged = bool(slopes[-1] < FLOOR_SLOPE)
    if flagged:
        level = max(level, float(err.min()))
    used = err > FLOOR_MARGIN * level
    if not used.all():
        flagged = True
        if used.sum() < 2:
            used[:] = True
        logger.warning("误差曲线到达平台 %.3e，%d 个点参与拟合", level, int(used.sum()))

    slope, intercept, residual = _least_squares(np.log(h[used]), np.log(err[used]))
    return SlopeFit(
        slope=slope,
        intercept=intercept,
        residual=residual,
        points_used=int(used.sum()),
        floor_flagged=flagged,
    )
