"""
统一错误报告模型
命令行失败时以 JSON 写到 stderr
"""

from typing import Any, Dict, Optional

from pydantic import BaseModel, Field

from dlra.exceptions import DlraException


class ErrorReport(BaseModel):
    """统一错误报告模型"""

    error: bool = Field(True, description="是否为错误报告")
    message: str = Field(..., description="错误消息")
    detail: Optional[Dict[str, Any]] = Field(None, description="错误详情")

    model_config = {
        "json_schema_extra": {
            "examples": [
                {
                    "error": True,
                    "message": "配置校验失败: config.yaml",
                    "detail": {"errors": [{"loc": ["convergence", "T"], "msg": "..."}]},
                },
                {
                    "error": True,
                    "message": "时间积分失败",
                    "detail": {"step": 12, "norm": 3.1e7},
                },
            ]
        }
    }

    @classmethod
    def from_exception(cls, exc: DlraException) -> "ErrorReport":
        return cls(message=exc.message, detail=exc.detail or None)
