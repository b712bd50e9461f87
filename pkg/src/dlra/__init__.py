"""dlra-bench: 并行 BUG 低秩积分器与基准工具"""

__version__ = "0.1.0"
