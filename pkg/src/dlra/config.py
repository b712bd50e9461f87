"""
Author: sy.pan
Date: 2026-03-02 10:14:27
LastEditors: sy.pan
LastEditTime: 2026-10-17 21:05:13
FilePath: /dlra_bench/src/dlra/config.py
Description:

Copyright (c) 2026 by sy.pan, All Rights Reserved.
"""

"""
配置管理模块
使用 config.yaml 文件管理所有配置，环境变量 DLRA_* 可覆盖部分运行参数
"""

from pathlib import Path
from typing import Optional

import yaml
from pydantic import BaseModel, Field, ValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict

from dlra.exceptions import ConfigError
from dlra.model.experiment import ExperimentConfig, HGrid, ProblemSpec
from dlra.model.solver_config import SolverConfig
from dlra.utils.enums import IntegratorVariant, ProblemKind, SolverMethod


class RuntimeSettings(BaseSettings):
    """环境变量覆盖（DLRA_CONFIG_PATH, DLRA_LOG_LEVEL, DLRA_CACHE_DIR）"""

    model_config = SettingsConfigDict(env_prefix="DLRA_")

    config_path: Optional[Path] = None
    log_level: Optional[str] = None
    cache_dir: Optional[Path] = None


class AppConfig(BaseModel):
    """应用配置"""

    name: str = "dlra-bench"
    version: str = "0.1.0"
    log_level: str = "INFO"


def _default_lattice() -> ExperimentConfig:
    return ExperimentConfig(
        problem=ProblemSpec(kind=ProblemKind.LATTICE),
        variants=[IntegratorVariant.PARALLEL2_V2, IntegratorVariant.AUGMENTED_BUG],
        ranks=[10, 20],
        T=3.2,
        solver=SolverConfig(method=SolverMethod.HEUN, substeps=2),
        h_grid=HGrid(points=1),
    )


def _default_norm_drift() -> ExperimentConfig:
    return ExperimentConfig(ranks=[15], h_grid=HGrid(start=1e-1, stop=1e-2, points=5))


class Config(BaseModel):
    """全局配置"""

    app: AppConfig = Field(default_factory=AppConfig)
    convergence: ExperimentConfig = Field(default_factory=ExperimentConfig)
    norm_drift: ExperimentConfig = Field(default_factory=_default_norm_drift)
    lattice: ExperimentConfig = Field(default_factory=_default_lattice)

    def section(self, name: str) -> ExperimentConfig:
        """按子命令名取实验配置（norm-drift -> norm_drift）"""
        key = name.replace("-", "_")
        if key not in ("convergence", "norm_drift", "lattice"):
            raise ConfigError(f"未知的配置节: {name}")
        return getattr(self, key)


def _default_config_path() -> Path:
    settings = RuntimeSettings()
    if settings.config_path is not None:
        return settings.config_path
    # 从项目根目录查找 config.yaml
    current_file = Path(__file__)
    project_root = current_file.parent.parent.parent
    return project_root / "config.yaml"


def load_config(config_path: str | Path | None = None) -> Config:
    """
    加载配置文件

    Args:
        config_path: 配置文件路径，如果为 None，则依次使用 DLRA_CONFIG_PATH 与项目根目录的 config.yaml

    Returns:
        Config: 配置对象
    """
    config_path = _default_config_path() if config_path is None else Path(config_path)

    if not config_path.exists():
        raise ConfigError(f"配置文件不存在: {config_path}")

    try:
        with open(config_path, "r", encoding="utf-8") as f:
            config_data = yaml.safe_load(f) or {}
    except yaml.YAMLError as e:
        raise ConfigError(f"配置文件解析失败: {config_path}", detail={"reason": str(e)})

    try:
        config = Config(**config_data)
    except ValidationError as e:
        raise ConfigError(
            f"配置校验失败: {config_path}", detail={"errors": e.errors(include_url=False)}
        )

    settings = RuntimeSettings()
    if settings.log_level:
        config.app.log_level = settings.log_level
    if settings.cache_dir is not None:
        for name in ("convergence", "norm_drift", "lattice"):
            section = getattr(config, name)
            section.reference.cache_dir = settings.cache_dir
    return config


def apply_overrides(
    section: ExperimentConfig,
    out: Path | None = None,
    seed: int | None = None,
    threads: int | None = None,
) -> ExperimentConfig:
    """命令行参数逐项覆盖实验配置"""
    update = {}
    if out is not None:
        update["output_dir"] = Path(out)
    if seed is not None:
        update["seed"] = seed
    if threads is not None:
        if threads < 1:
            raise ConfigError(f"--threads 必须 >= 1，当前: {threads}")
        update["threads"] = threads
    try:
        return ExperimentConfig.model_validate({**section.model_dump(), **update})
    except ValidationError as e:
        raise ConfigError("命令行覆盖项校验失败", detail={"errors": e.errors(include_url=False)})


# 全局配置实例
_config: Config | None = None


def get_config() -> Config:
    """
    获取全局配置实例（单例模式）

    Returns:
        Config: 配置对象
    """
    global _config
    if _config is None:
        _config = load_config()
    return _config


def reload_config(config_path: str | Path | None = None) -> Config:
    """
    重新加载配置

    Args:
        config_path: 配置文件路径

    Returns:
        Config: 配置对象
    """
    global _config
    _config = load_config(config_path)
    return _config


__all__ = [
    "AppConfig",
    "Config",
    "RuntimeSettings",
    "apply_overrides",
    "get_config",
    "load_config",
    "reload_config",
]
