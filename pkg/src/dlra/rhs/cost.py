"""
结构化右端项的算量模型（单位: 乘加）

  C_aug^K = sum_l r (r n d_l + r m + m c_l)
  C_aug^L = sum_l r (r m c_l + r n + n d_l)
  C_ode^K = N sum_l r (4 r n d_l + 4 r m + 2 m c_l)
  C_ode^L = N sum_l r (4 r m c_l + 4 r n + 2 n d_l)
  C_ode^S = N sum_l r (4 r n d_l + 4 r m c_l + 16 r^2)

全部用 Python int 计算，不会溢出。
"""

from typing import Sequence

from dlra.exceptions import InputError
from dlra.model.records import CostReport


def cost_estimate(
    m: int,
    n: int,
    r: int,
    M: int,
    c: Sequence[int],
    d: Sequence[int],
    n_ode: int,
) -> CostReport:
    """
    按闭式公式计算五项算量

    Args:
        m, n: 问题维度
        r: 秩
        M: 项数
        c, d: 每项 C_l / D_l 的每行非零元个数
        n_ode: 子步右端项求值次数

    Returns:
        CostReport: 精确整数结果
    """
    if min(m, n, r, M) < 1 or n_ode < 0:
        raise InputError(f"算量参数非法: m={m}, n={n}, r={r}, M={M}, n_ode={n_ode}")
    if len(c) != M or len(d) != M:
        raise InputError(f"c / d 长度应为 M={M}，当前 {len(c)} / {len(d)}")
    m, n, r, N = int(m), int(n), int(r), int(n_ode)
    c = [int(x) for x in c]
    d = [int(x) for x in d]

    aug_K = sum(r * (r * n * dl + r * m + m * cl) for cl, dl in zip(c, d))
    aug_L = sum(r * (r * m * cl + r * n + n * dl) for cl, dl in zip(c, d))
    ode_K = N * sum(r * (4 * r * n * dl + 4 * r * m + 2 * m * cl) for cl, dl in zip(c, d))
    ode_L = N * sum(r * (4 * r * m * cl + 4 * r * n + 2 * n * dl) for cl, dl in zip(c, d))
    ode_S = N * sum(r * (4 * r * n * dl + 4 * r * m * cl + 16 * r * r) for cl, dl in zip(c, d))
    return CostReport(
        c_aug_K=aug_K, c_aug_L=aug_L, c_ode_K=ode_K, c_ode_L=ode_L, c_ode_S=ode_S, n_ode=N
    )
