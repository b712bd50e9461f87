"""
配置加载、环境变量覆盖、错误报告与子步执行器测试
"""

from pathlib import Path

import pytest

from dlra.config import Config, apply_overrides, load_config
from dlra.exceptions import ConfigError, IntegrationFailure
from dlra.integrators.executor import SubstepExecutor
from dlra.schemas.error import ErrorReport
from dlra.utils.enums import ProblemKind, SolverMethod

PROJECT_CONFIG = Path(__file__).resolve().parent.parent / "config.yaml"


class TestLoadConfig:
    """YAML loading and validation."""

    def test_project_config_is_valid(self):
        config = load_config(PROJECT_CONFIG)
        assert config.convergence.problem.kind is ProblemKind.SCHRODINGER
        assert config.convergence.h_grid.as_list()[0] == pytest.approx(1e-1)
        assert len(config.convergence.h_grid.as_list()) == 8
        assert config.lattice.solver.method is SolverMethod.HEUN
        assert config.norm_drift.theta_sweep == [1e-4, 1e-5, 1e-6]

    def test_partial_file_uses_defaults(self, tmp_path):
        path = tmp_path / "c.yaml"
        path.write_text("norm_drift:\n    ranks: [3]\n", encoding="utf-8")
        config = load_config(path)
        assert config.norm_drift.ranks == [3]
        assert config.lattice.problem.kind is ProblemKind.LATTICE
        assert config.section("norm-drift") is config.norm_drift

    def test_unknown_section(self):
        with pytest.raises(ConfigError):
            Config().section("plot")

    @pytest.mark.parametrize(
        "text",
        [
            "convergence: [unclosed\n",
            "convergence:\n    h_grid: {values: [0.1, 0.2]}\n",
            "convergence:\n    ranks: []\n",
            "convergence:\n    truncation: {mode: fixed_rank, target_rank: 0}\n",
        ],
    )
    def test_invalid_files(self, tmp_path, text):
        path = tmp_path / "bad.yaml"
        path.write_text(text, encoding="utf-8")
        with pytest.raises(ConfigError):
            load_config(path)

    def test_environment_overrides(self, tmp_path, monkeypatch):
        monkeypatch.setenv("DLRA_CONFIG_PATH", str(PROJECT_CONFIG))
        monkeypatch.setenv("DLRA_LOG_LEVEL", "DEBUG")
        monkeypatch.setenv("DLRA_CACHE_DIR", str(tmp_path / "cache"))
        config = load_config()
        assert config.app.log_level == "DEBUG"
        assert config.convergence.reference.cache_dir == tmp_path / "cache"

    def test_command_line_overrides(self, tmp_path):
        section = Config().convergence
        updated = apply_overrides(section, out=tmp_path, seed=4, threads=2)
        assert (updated.output_dir, updated.seed, updated.threads) == (tmp_path, 4, 2)
        assert section.seed == 0
        with pytest.raises(ConfigError):
            apply_overrides(section, threads=0)
        with pytest.raises(ConfigError):
            apply_overrides(section, seed=-1)


class TestErrorReport:
    """Error payload written to stderr."""

    def test_from_exception(self):
        report = ErrorReport.from_exception(IntegrationFailure("爆炸", detail={"step": 3}))
        assert report.model_dump() == {"error": True, "message": "爆炸", "detail": {"step": 3}}
        assert ErrorReport.from_exception(ConfigError()).detail is None


class TestSubstepExecutor:
    """Serial and pooled execution of independent tasks."""

    def test_results_keep_submission_order(self):
        tasks = {"K": lambda: 1, "L": lambda: 2, "S": lambda: 3}
        with SubstepExecutor(threads=3) as executor:
            assert list(executor.run(tasks).items()) == [("K", 1), ("L", 2), ("S", 3)]
        assert SubstepExecutor().run(tasks) == {"K": 1, "L": 2, "S": 3}

    def test_task_errors_propagate(self):
        def boom():
            raise IntegrationFailure("子步失败")

        with SubstepExecutor(threads=2) as executor:
            with pytest.raises(IntegrationFailure):
                executor.run({"K": lambda: 1, "L": boom})

    def test_invalid_thread_count(self):
        with pytest.raises(ConfigError):
            SubstepExecutor(threads=0)
