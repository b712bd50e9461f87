"""
SVG 绘图

  - convergence / norm_drift: 双对数误差曲线，叠加 1..4 阶参考线
  - flux: 标量通量 log10 热图，非正值显示为白色

固定 svg.hashsalt 且不写入日期，相同输入得到相同字节。
"""

import logging
from pathlib import Path
from typing import Optional, Sequence, Union

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from dlra.exceptions import InputError  # noqa: E402
from dlra.utils.enums import PlotKind  # noqa: E402

logger = logging.getLogger(__name__)

SVG_RC = {
    "svg.hashsalt": "dlra-bench",
    "svg.fonttype": "none",
    "path.simplify": False,
}

_VALUE_COLUMN = {
    PlotKind.CONVERGENCE: ("error", "相对误差"),
    PlotKind.NORM_DRIFT: ("drift", "范数漂移 max |‖Y_k‖ - ‖Y_0‖|"),
}


def _read(csv_path: Path, required: Sequence[str]) -> pd.DataFrame:
    if not csv_path.exists():
        raise InputError(f"CSV 文件不存在: {csv_path}")
    try:
        df = pd.read_csv(csv_path)
    except pd.errors.EmptyDataError:
        raise InputError(f"CSV 文件为空: {csv_path}")
    if df.empty:
        raise InputError(f"CSV 文件没有数据行: {csv_path}")
    missing = [c for c in required if c not in df.columns]
    if missing:
        raise InputError(f"CSV 缺少列: {missing}", detail={"columns": list(df.columns)})
    return df


def flux_log_image(phi: np.ndarray) -> np.ma.MaskedArray:
    """log10(phi)，非正值与非有限值被遮盖"""
    phi = np.asarray(phi, dtype=float)
    bad = ~np.isfinite(phi) | (phi <= 0)
    safe = np.where(bad, 1.0, phi)
    return np.ma.masked_array(np.log10(safe), mask=bad)


def _plot_errors(ax, df: pd.DataFrame, kind: PlotKind, guides: Sequence[int]) -> None:
    column, ylabel = _VALUE_COLUMN[kind]
    df = df[df[column] > 0]
    if df.empty:
        raise InputError(f"{column} 列没有正值，无法绘制双对数图")

    for (variant, rank), group in df.groupby(["variant", "rank"], sort=True):
        group = group.sort_values("h", ascending=False)
        (line,) = ax.loglog(group["h"], group[column], marker="o", label=f"{variant}, r={rank}")
        line.set_gid(f"series-{variant}-r{rank}")

    # 参考线锚定在最大步长处的最大误差
    h_ref = float(df["h"].max())
    e_ref = float(df.loc[df["h"] == h_ref, column].max())
    h_line = np.array([float(df["h"].min()), h_ref])
    for order in guides:
        (line,) = ax.loglog(
            h_line, e_ref * (h_line / h_ref) ** order, linestyle="--", color="0.5", linewidth=0.8
        )
        line.set_gid(f"guide-order-{order}")
        ax.annotate(f"O(h^{order})", (h_line[0], e_ref * (h_line[0] / h_ref) ** order), fontsize=7)

    ax.set_xlabel("h")
    ax.set_ylabel(ylabel)
    ax.grid(True, which="both", linewidth=0.3)
    ax.legend(fontsize=7)


def _plot_flux(fig, ax, df: pd.DataFrame) -> None:
    grid = df.pivot(index="y", columns="x", values="phi").sort_index().sort_index(axis=1)
    xs = grid.columns.to_numpy(dtype=float)
    ys = grid.index.to_numpy(dtype=float)
    image = flux_log_image(grid.to_numpy())

    cmap = plt.get_cmap("viridis").copy()
    cmap.set_bad("white")
    mesh = ax.imshow(
        image,
        origin="lower",
        cmap=cmap,
        extent=(xs.min(), xs.max(), ys.min(), ys.max()),
        interpolation="nearest",
    )
    mesh.set_gid("flux-heatmap")
    fig.colorbar(mesh, ax=ax, label="log10 Φ")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_aspect("equal")


def render_plot(
    csv_path: Union[str, Path],
    kind: PlotKind,
    out_path: Optional[Union[str, Path]] = None,
    guides: Sequence[int] = (1, 2, 3, 4),
) -> Path:
    """
    由 CSV 生成 SVG

    Args:
        csv_path: 输入表（convergence / norm_drift 表或 x,y,phi 通量表）
        kind: 绘图类型
        out_path: 输出路径，默认与 CSV 同名的 .svg
        guides: 参考线阶数

    Returns:
        Path: SVG 文件路径
    """
    csv_path = Path(csv_path)
    kind = PlotKind(kind)
    out_path = Path(out_path) if out_path is not None else csv_path.with_suffix(".svg")

    if kind is PlotKind.FLUX:
        df = _read(csv_path, ["x", "y", "phi"])
    else:
        df = _read(csv_path, ["variant", "rank", "h", _VALUE_COLUMN[kind][0]])

    with plt.rc_context(SVG_RC):
        fig, ax = plt.subplots(figsize=(6, 4.5))
        try:
            if kind is PlotKind.FLUX:
                _plot_flux(fig, ax, df)
            else:
                _plot_errors(ax, df, kind, guides)
            out_path.parent.mkdir(parents=True, exist_ok=True)
            fig.savefig(out_path, format="svg", metadata={"Date": None})
        finally:
            plt.close(fig)

    logger.info("绘图 %s -> %s", kind.value, out_path)
    return out_path
