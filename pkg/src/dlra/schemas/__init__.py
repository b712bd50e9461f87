"""输出数据结构"""

from dlra.schemas.error import ErrorReport

__all__ = ["ErrorReport"]
