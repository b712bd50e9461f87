"""
子步求解器配置
"""

from pydantic import BaseModel, ConfigDict, Field, model_validator

from dlra.utils.enums import SolverMethod


class SolverConfig(BaseModel):
    """
    子步 ODE 求解器配置

    说明:
      - heun / rk4 使用固定子步数 substeps
      - embedded45 使用 rtol / atol 自适应步长，max_steps 为安全上限
      - safety / min_factor / max_factor 为步长控制器参数
    """

    model_config = ConfigDict(frozen=True)

    method: SolverMethod = SolverMethod.EMBEDDED45
    substeps: int = Field(default=1, ge=1)
    rtol: float = Field(default=1e-10, gt=0.0)
    atol: float = Field(default=1e-10, gt=0.0)
    max_steps: int = Field(default=100_000, ge=1)
    safety: float = Field(default=0.9, gt=0.0, le=1.0)
    min_factor: float = Field(default=0.2, gt=0.0)
    max_factor: float = Field(default=5.0, gt=1.0)

    @model_validator(mode="after")
    def _check_factors(self):
        if self.min_factor >= 1.0:
            raise ValueError(f"min_factor 必须小于 1，当前: {self.min_factor}")
        return self

    @property
    def label(self) -> str:
        """输出中记录的求解器描述"""
        if self.method is SolverMethod.EMBEDDED45:
            return f"embedded45(rtol={self.rtol:g},atol={self.atol:g})"
        return f"{self.method.value}(substeps={self.substeps})"
