"""
子步求解器测试
"""

import numpy as np
import pytest
import scipy.linalg as la
from pydantic import ValidationError

from dlra.exceptions import InputError, IntegrationFailure
from dlra.model.solver_config import SolverConfig
from dlra.solvers import integrate, integrate_with_stats
from dlra.utils.enums import SolverMethod
from dlra.utils.slope import fit_slope


def _linear_problem(seed=0, k=5):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((k, k)) / np.sqrt(k)
    B = rng.standard_normal((k - 1, k - 1)) / np.sqrt(k)
    Y0 = rng.standard_normal((k, k - 1))

    def rhs(t, Y):
        return A @ Y + Y @ B

    def exact(t):
        return la.expm(t * A) @ Y0 @ la.expm(t * B)

    return rhs, Y0, exact


class TestFixedStepMethods:
    """Heun and classical RK4."""

    @pytest.mark.parametrize("method, order", [(SolverMethod.HEUN, 2), (SolverMethod.RK4, 4)])
    def test_observed_order(self, method, order):
        rhs, Y0, exact = _linear_problem()
        errors = []
        for substeps in (8, 16):
            config = SolverConfig(method=method, substeps=substeps)
            errors.append(np.linalg.norm(integrate(rhs, Y0, 0.0, 1.0, config) - exact(1.0)))
        observed = np.log2(errors[0] / errors[1])
        assert abs(observed - order) < 0.3

    @pytest.mark.parametrize("method, order", [(SolverMethod.HEUN, 2), (SolverMethod.RK4, 4)])
    def test_fitted_order_over_substep_sweep(self, method, order):
        rhs, Y0, exact = _linear_problem(seed=1)
        substeps = [8, 16, 32, 64]
        errors = [
            np.linalg.norm(
                integrate(rhs, Y0, 0.0, 1.0, SolverConfig(method=method, substeps=s)) - exact(1.0)
            )
            for s in substeps
        ]
        fit = fit_slope([1.0 / s for s in substeps], errors)
        assert abs(fit.slope - order) < 0.2
        assert not fit.floor_flagged

    @pytest.mark.parametrize(
        "config",
        [
            SolverConfig(method=SolverMethod.RK4, substeps=100),
            SolverConfig(method=SolverMethod.EMBEDDED45, rtol=1e-12, atol=1e-12),
        ],
    )
    def test_skew_flow_conserves_norm(self, config):
        rng = np.random.default_rng(7)
        W = rng.standard_normal((5, 5))
        A = 0.5 * (W - W.T)
        Y0 = rng.standard_normal((5, 5))
        Y1 = integrate(lambda t, Y: A @ Y, Y0, 0.0, 1.0, config)
        assert abs(np.linalg.norm(Y1) - np.linalg.norm(Y0)) < 1e-8 * np.linalg.norm(Y0)

    def test_stats_counts(self):
        rhs, Y0, _ = _linear_problem()
        _, stats = integrate_with_stats(rhs, Y0, 0.0, 0.3, SolverConfig(method="rk4", substeps=3))
        assert (stats.n_steps, stats.n_rhs_evals, stats.n_rejected) == (3, 12, 0)
        _, stats = integrate_with_stats(rhs, Y0, 0.0, 0.3, SolverConfig(method="heun", substeps=2))
        assert (stats.n_steps, stats.n_rhs_evals) == (2, 4)
        assert stats.wall_time >= 0.0

    def test_complex_state(self):
        def rhs(t, Y):
            return 1j * Y

        config = SolverConfig(method="rk4", substeps=50)
        Y1 = integrate(rhs, np.ones((2, 2), dtype=complex), 0.0, 1.0, config)
        assert np.allclose(Y1, np.exp(1j) * np.ones((2, 2)), atol=1e-8)


class TestEmbedded45:
    """Adaptive Dormand-Prince pair."""

    def test_matches_matrix_exponential(self):
        rhs, Y0, exact = _linear_problem(seed=3)
        config = SolverConfig(method=SolverMethod.EMBEDDED45, rtol=1e-10, atol=1e-10)
        Y1, stats = integrate_with_stats(rhs, Y0, 0.2, 1.2, config)
        assert np.linalg.norm(Y1 - exact(1.0)) < 1e-8 * np.linalg.norm(exact(1.0))
        assert stats.n_steps > 1

    def test_scalar_growth_reaches_e(self):
        config = SolverConfig(method=SolverMethod.EMBEDDED45, rtol=1e-12, atol=1e-12)
        Y1 = integrate(lambda t, Y: Y, np.ones((1, 1)), 0.0, 1.0, config)
        assert abs(Y1[0, 0] - np.e) < 1e-10

    def test_lands_exactly_on_end_time(self):
        seen = []

        def rhs(t, Y):
            seen.append(t)
            return -Y

        integrate(rhs, np.ones((1, 1)), 0.0, 0.7, SolverConfig(method="embedded45"))
        assert max(seen) == pytest.approx(0.7, abs=1e-15)

    def test_time_dependent_rhs(self):
        def rhs(t, Y):
            return np.cos(t) * np.ones_like(Y)

        Y1 = integrate(rhs, np.zeros((2, 3)), 0.0, 2.0, SolverConfig(rtol=1e-11, atol=1e-11))
        assert np.allclose(Y1, np.sin(2.0), atol=1e-9)

    def test_step_limit_exceeded(self):
        rhs, Y0, _ = _linear_problem()
        config = SolverConfig(method="embedded45", rtol=1e-12, atol=1e-12, max_steps=2)
        with pytest.raises(IntegrationFailure):
            integrate(rhs, Y0, 0.0, 10.0, config)


class TestSolverErrors:
    """Input validation and numerical failure."""

    def test_invalid_interval(self):
        rhs, Y0, _ = _linear_problem()
        with pytest.raises(InputError):
            integrate(rhs, Y0, 1.0, 1.0, SolverConfig())

    def test_nonfinite_initial_value(self):
        rhs, Y0, _ = _linear_problem()
        Y0[0, 0] = np.inf
        with pytest.raises(InputError):
            integrate(rhs, Y0, 0.0, 1.0, SolverConfig())

    def test_blowup_raises_integration_failure(self):
        def rhs(t, Y):
            return 1e200 * Y * Y

        with np.errstate(over="ignore", invalid="ignore"):
            with pytest.raises(IntegrationFailure):
                integrate(rhs, np.full((2, 2), 1e200), 0.0, 1.0, SolverConfig(method="heun"))

    def test_config_validation(self):
        with pytest.raises(ValidationError):
            SolverConfig(min_factor=1.5)
        with pytest.raises(ValidationError):
            SolverConfig(substeps=0)
        assert SolverConfig(method="rk4", substeps=4).label == "rk4(substeps=4)"
