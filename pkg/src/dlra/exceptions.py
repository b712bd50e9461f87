"""
自定义异常类
"""

from typing import Any, Dict, Optional


class DlraException(Exception):
    """应用基础异常类

    exit_code 对应命令行退出码: 2 = 配置/输入错误, 3 = 数值失败
    """

    def __init__(
        self,
        message: str,
        exit_code: int = 1,
        detail: Optional[Dict[str, Any]] = None,
    ):
        self.message = message
        self.exit_code = exit_code
        self.detail = detail or {}
        super().__init__(self.message)


class ConfigError(DlraException):
    """配置错误"""

    def __init__(self, message: str = "配置无效", detail: Optional[Dict[str, Any]] = None):
        super().__init__(message, exit_code=2, detail=detail)


class InputError(DlraException):
    """输入数据错误（非有限值、维度非法等）"""

    def __init__(self, message: str = "输入数据无效", detail: Optional[Dict[str, Any]] = None):
        super().__init__(message, exit_code=2, detail=detail)


class ShapeMismatchError(InputError):
    """矩阵形状不匹配"""

    def __init__(self, message: str = "矩阵形状不匹配", detail: Optional[Dict[str, Any]] = None):
        super().__init__(message, detail=detail)


class PolicyError(DlraException):
    """截断策略 / 秩界违例"""

    def __init__(self, message: str = "秩界违例", detail: Optional[Dict[str, Any]] = None):
        super().__init__(message, exit_code=2, detail=detail)


class NormCompatibilityError(DlraException):
    """问题不满足范数相容条件 Re<Z, F(Z)> = 0"""

    def __init__(
        self, message: str = "问题不满足范数相容条件", detail: Optional[Dict[str, Any]] = None
    ):
        super().__init__(message, exit_code=2, detail=detail)


class NumericalError(DlraException):
    """数值错误（SVD 失败、非有限中间结果、范数爆炸）"""

    def __init__(self, message: str = "数值计算失败", detail: Optional[Dict[str, Any]] = None):
        super().__init__(message, exit_code=3, detail=detail)


class IntegrationFailure(NumericalError):
    """时间积分失败

    partial 保存失败前已经完成的轨迹（若有）
    """

    def __init__(
        self,
        message: str = "时间积分失败",
        detail: Optional[Dict[str, Any]] = None,
        partial: Any = None,
    ):
        super().__init__(message, detail=detail)
        self.partial = partial


class ConstructionError(NumericalError):
    """问题构造自检失败（例如 P_N 矩阵与求积校验不一致）"""

    def __init__(self, message: str = "问题构造校验失败", detail: Optional[Dict[str, Any]] = None):
        super().__init__(message, detail=detail)


class StaleCacheError(NumericalError):
    """投影因子缓存与当前基不匹配"""

    def __init__(self, message: str = "投影缓存已失效", detail: Optional[Dict[str, Any]] = None):
        super().__init__(message, detail=detail)
