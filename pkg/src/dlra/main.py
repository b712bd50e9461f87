"""
命令行主入口

  dlra-bench convergence [--config FILE] [--out DIR] [--seed N] [--threads K]
  dlra-bench norm-drift  [...]
  dlra-bench lattice     [...]
  dlra-bench plot CSV --kind {convergence,norm_drift,flux} [--out DIR]

退出码: 0 成功, 2 配置/输入错误, 3 数值失败, 1 其他异常
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional

from dlra import __version__
from dlra.config import apply_overrides, get_config, reload_config
from dlra.exceptions import DlraException
from dlra.model.experiment import ExperimentConfig
from dlra.schemas.error import ErrorReport
from dlra.services.convergence_service import run_convergence, run_norm_drift
from dlra.services.lattice_service import run_lattice
from dlra.utils.enums import PlotKind
from dlra.utils.plotting import render_plot

logger = logging.getLogger("dlra")

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

RUNNERS: Dict[str, Callable[[ExperimentConfig], object]] = {
    "convergence": run_convergence,
    "norm-drift": run_norm_drift,
    "lattice": run_lattice,
}


def configure_logging(level: str = "INFO") -> None:
    """配置根日志，warnings 模块的告警一并写入日志"""
    logging.basicConfig(level=level.upper(), format=LOG_FORMAT, stream=sys.stderr, force=True)
    logging.captureWarnings(True)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None, help="配置文件（YAML）")
    common.add_argument("--out", type=Path, default=None, help="输出目录")
    common.add_argument("--log-level", default=None, help="日志级别，覆盖配置文件")

    run_opts = argparse.ArgumentParser(add_help=False)
    run_opts.add_argument("--seed", type=int, default=None, help="随机种子")
    run_opts.add_argument(
        "--threads", type=int, default=None, help="子步线程数，1 表示串行"
    )

    parser = argparse.ArgumentParser(
        prog="dlra-bench", description="并行 BUG 低秩积分器基准工具"
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("convergence", parents=[common, run_opts], help="收敛阶研究")
    sub.add_parser("norm-drift", parents=[common, run_opts], help="范数漂移研究")
    sub.add_parser("lattice", parents=[common, run_opts], help="lattice 基准运行")

    plot = sub.add_parser("plot", parents=[common], help="由 CSV 生成 SVG")
    plot.add_argument("csv", type=Path, help="输入 CSV")
    plot.add_argument(
        "--kind", choices=[k.value for k in PlotKind], required=True, help="绘图类型"
    )
    plot.add_argument(
        "--guides", type=int, nargs="*", default=[1, 2, 3, 4], help="参考线阶数"
    )
    return parser


def _run(args: argparse.Namespace) -> None:
    config = reload_config(args.config) if args.config is not None else get_config()
    configure_logging(args.log_level or config.app.log_level)

    if args.command == "plot":
        out_path = None
        if args.out is not None:
            out_path = args.out / args.csv.with_suffix(".svg").name
        path = render_plot(args.csv, args.kind, out_path, guides=args.guides)
        logger.info("已生成 %s", path)
        return

    section = apply_overrides(
        config.section(args.command), out=args.out, seed=args.seed, threads=args.threads
    )
    logger.info(
        "%s %s: 问题 %s, 输出目录 %s",
        config.app.name,
        args.command,
        section.problem.kind.value,
        section.output_dir,
    )
    RUNNERS[args.command](section)


def main(argv: Optional[List[str]] = None) -> int:
    """主入口函数（用于命令行启动）"""
    args = build_parser().parse_args(argv)
    try:
        _run(args)
    except DlraException as exc:
        logger.error("%s", exc.message)
        report = ErrorReport.from_exception(exc)
        print(json.dumps(report.model_dump(), ensure_ascii=False, default=str), file=sys.stderr)
        return exc.exit_code
    except Exception as exc:
        logger.exception("未处理的异常")
        report = ErrorReport(
            message="内部错误", detail={"type": type(exc).__name__, "message": str(exc)}
        )
        print(json.dumps(report.model_dump(), ensure_ascii=False, default=str), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
