"""
基准问题构造测试: P_N 矩阵、lattice、Schrödinger、标定问题、问题文件与注册表
"""

import numpy as np
import pytest

from dlra.exceptions import ConfigError, InputError
from dlra.model.experiment import ProblemSpec
from dlra.model.solver_config import SolverConfig
from dlra.problems.lattice import (
    LatticeLayout,
    default_lattice_layout,
    lattice_build,
    lattice_scalar_flux,
    load_lattice_overrides,
)
from dlra.problems.loaders import load_problem_file, read_triplets
from dlra.problems.pn_moments import moment_index, n_moments, pn_flux_matrices
from dlra.problems.registry import build_problem
from dlra.problems.schrodinger import (
    cosine_potential,
    schrodinger_build,
    schrodinger_initial,
    second_difference,
)
from dlra.problems.synthetic import synthetic_exact
from dlra.rhs import norm_compatibility_defect
from dlra.solvers import integrate
from dlra.utils.enums import ProblemKind, ScalarField, SolverMethod, SyntheticKind


class TestPnMoments:
    """P_N flux matrices."""

    def test_p1_entries(self):
        pn = pn_flux_matrices(1)
        assert pn.A_x.shape == (4, 4)
        for A in (pn.A_x, pn.A_y):
            nonzero = A[A != 0.0]
            assert nonzero.size == 2
            assert np.allclose(np.abs(nonzero), 1.0 / np.sqrt(3.0), atol=1e-12)
        # x 方向耦合 l=0 与 cos 型 l=1, m=1；y 方向耦合 sin 型 l=1, m=-1
        assert pn.A_x[0, moment_index(1, 1)] != 0.0
        assert pn.A_y[0, moment_index(1, -1)] != 0.0

    @pytest.mark.parametrize("N", [1, 3, 5])
    def test_symmetry_and_abs_matrices(self, N):
        pn = pn_flux_matrices(N)
        assert pn.A_x.shape == (n_moments(N), n_moments(N))
        assert np.array_equal(pn.A_x, pn.A_x.T)
        assert np.array_equal(pn.A_y, pn.A_y.T)
        assert np.linalg.eigvalsh(pn.abs_A_x).min() > -1e-12
        # |A| 与 A 的特征值绝对值一致
        assert np.allclose(
            np.sort(np.abs(np.linalg.eigvalsh(pn.A_x))),
            np.sort(np.linalg.eigvalsh(pn.abs_A_x)),
            atol=1e-12,
        )
        assert pn.G[0, 0] == 0.0 and np.all(np.diag(pn.G)[1:] == -1.0)

    @pytest.mark.parametrize("N", [1, 3, 5, 9])
    def test_flux_spectral_radius_at_most_one(self, N):
        pn = pn_flux_matrices(N)
        for A in (pn.A_x, pn.A_y):
            assert np.max(np.abs(np.linalg.eigvalsh(A))) <= 1.0 + 1e-12

    def test_lower_order_blocks_agree_across_orders(self):
        small, large = pn_flux_matrices(3), pn_flux_matrices(7)
        k = n_moments(3)
        assert np.allclose(large.A_x[:k, :k], small.A_x, atol=1e-12)
        assert np.allclose(large.A_y[:k, :k], small.A_y, atol=1e-12)

    def test_moment_index(self):
        assert moment_index(0, 0) == 0
        assert moment_index(1, -1) == 1
        assert moment_index(2, 2) == 8
        assert n_moments(9) == 100

    def test_order_zero_rejected(self):
        with pytest.raises(InputError):
            pn_flux_matrices(0)


class TestLattice:
    """Lattice geometry, cross sections and dissipativity."""

    def test_default_layout_cell_counts(self):
        problem = lattice_build(14, 1)
        absorbers = (problem.sigma_a > 0) & (problem.source == 0)
        assert int(np.count_nonzero(absorbers)) == 48
        assert int(np.count_nonzero(problem.source > 0)) == 4
        assert problem.source_block_mask().sum() == 4
        assert problem.dx == pytest.approx(0.5)
        assert problem.time_step(0.5) == pytest.approx(0.25)
        assert np.allclose(problem.cell_centers()[:2], [0.25, 0.75])

    def test_default_layout_blocks(self):
        layout = default_lattice_layout()
        assert int(np.count_nonzero(layout.sigma_a)) == 13
        assert layout.source[3, 3] == 1.0 and layout.sigma_a[3, 3] == 10.0
        assert layout.sigma_s[0, 0] == 1.0 and layout.sigma_s[1, 1] == 0.0

    def test_grid_must_be_multiple_of_seven(self):
        with pytest.raises(InputError):
            lattice_build(10, 1)

    def test_initial_scalar_flux(self):
        problem = lattice_build(7, 1)
        phi = lattice_scalar_flux(problem.initial_dense(), problem)
        assert phi.shape == (7, 7)
        assert np.allclose(phi, 4.0 * np.pi * 1e-9, rtol=1e-12)
        phi_lr = lattice_scalar_flux(problem.initial_state(2), problem)
        assert np.allclose(phi_lr, phi, rtol=1e-12)

    def test_zero_source_layout_is_dissipative(self, rng):
        layout = default_lattice_layout()
        layout = LatticeLayout(sigma_s=layout.sigma_s, sigma_a=layout.sigma_a, source=np.zeros((7, 7)))
        problem = lattice_build(14, 2, layout=layout)
        assert problem.rhs.source_norm() == 0.0
        for _ in range(5):
            Z = rng.standard_normal(problem.rhs.shape)
            assert np.vdot(Z, problem.rhs.eval_full(0.0, Z)).real <= 1e-12 * np.vdot(Z, Z).real

    def test_gaussian_pulse_advection_is_dissipative(self):
        problem = lattice_build(14, 1, layout=LatticeLayout.zeros())
        x = problem.cell_centers()
        X, Yc = np.meshgrid(x, x, indexing="ij")
        pulse = np.exp(-((X - 3.5) ** 2 + (Yc - 3.5) ** 2) / (2 * 0.5**2))
        Y = np.zeros((problem.n_cells, n_moments(1)))
        Y[:, 0] = pulse.ravel()
        config = SolverConfig(method=SolverMethod.RK4, substeps=20)
        norms, peaks = [np.linalg.norm(Y)], [Y[:, 0].max()]
        for k in range(5):
            Y = integrate(problem.rhs, Y, 0.2 * k, 0.2 * (k + 1), config)
            norms.append(np.linalg.norm(Y))
            peaks.append(Y[:, 0].max())
        assert all(b <= a * (1 + 1e-6) for a, b in zip(norms, norms[1:]))
        # 脉冲向外扩散，峰值下降
        assert peaks[-1] < peaks[0]

    def test_overrides_file(self, tmp_path):
        path = tmp_path / "overrides.txt"
        path.write_text("# block_row block_col sigma_s sigma_a Q\n0, 0, 2.0, 0.5, 0.0\n6 6 0 0 3\n")
        layout = load_lattice_overrides(path)
        assert layout.sigma_s[0, 0] == 2.0 and layout.sigma_a[0, 0] == 0.5
        assert layout.source[6, 6] == 3.0
        assert layout.source[3, 3] == 1.0

    def test_overrides_out_of_range(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("7 0 1 1 0\n")
        with pytest.raises(ConfigError):
            load_lattice_overrides(path)
        with pytest.raises(ConfigError):
            load_lattice_overrides(tmp_path / "missing.txt")


class TestSchrodinger:
    """Discrete Schrödinger right-hand side and initial data."""

    def test_operator_sparsity(self):
        assert second_difference(10).nnz == 30

    def test_odd_grid_rejected(self):
        with pytest.raises(InputError):
            schrodinger_build(9)

    def test_matches_dense_formula(self, rng):
        n = 10
        rhs = schrodinger_build(n)
        D = second_difference(n).toarray()
        V = cosine_potential(n).toarray()
        Y = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        expected = 0.5j * (D @ Y + Y @ D.T) - 1j * V @ Y @ V
        assert np.allclose(rhs.eval_full(0.0, Y), expected, atol=1e-13)
        assert rhs.field is ScalarField.COMPLEX

    def test_norm_compatible(self):
        assert norm_compatibility_defect(schrodinger_build(20), n_probes=5) < 1e-12

    def test_initial_singular_values(self):
        state = schrodinger_initial(20, 4, seed=3)
        assert np.allclose(state.singular_values(), 10.0 ** -np.arange(1, 5), rtol=1e-12)
        with pytest.raises(InputError):
            schrodinger_initial(20, 21, seed=0)


class TestSynthetic:
    """Calibration problems with closed-form solutions."""

    @pytest.mark.parametrize("kind", list(SyntheticKind))
    def test_exact_starts_at_initial(self, kind):
        problem = synthetic_exact(9, 7, 3, kind, seed=1)
        assert np.allclose(problem.exact(0.0), problem.initial.dense(), atol=1e-15)

    @pytest.mark.parametrize("kind", list(SyntheticKind))
    def test_exact_solves_ode(self, kind):
        problem = synthetic_exact(9, 7, 3, kind, seed=2)
        t, delta = 0.3, 1e-5
        derivative = (problem.exact(t + delta) - problem.exact(t - delta)) / (2 * delta)
        expected = problem.rhs.eval_full(t, problem.exact(t))
        assert np.linalg.norm(derivative - expected) <= 1e-7 * np.linalg.norm(expected)

    def test_two_sided_closed_form_matches_dense_integration(self):
        problem = synthetic_exact(9, 7, 3, SyntheticKind.TWO_SIDED, seed=4)
        config = SolverConfig(method=SolverMethod.EMBEDDED45, rtol=1e-12, atol=1e-12)
        Y1 = integrate(problem.rhs, problem.initial.dense(), 0.0, 0.5, config)
        expected = problem.exact(0.5)
        assert np.linalg.norm(Y1 - expected) <= 1e-9 * np.linalg.norm(expected)

    def test_skew_preserves_norm(self):
        problem = synthetic_exact(12, 8, 2, SyntheticKind.SKEW, seed=0)
        norm0 = problem.initial.norm()
        for t in (0.5, 1.0, 2.0):
            assert np.linalg.norm(problem.exact(t)) == pytest.approx(norm0, rel=1e-12)

    def test_invalid_dimensions(self):
        with pytest.raises(InputError):
            synthetic_exact(4, 3, 5, SyntheticKind.SKEW)


class TestProblemFile:
    """YAML problem definitions with triplet and vector files."""

    @staticmethod
    def _write(tmp_path, coefficient="one", field="real", c_rows="0 0 1.0\n1 2 -0.5\n2 1 0.5\n"):
        (tmp_path / "c.txt").write_text(c_rows)
        (tmp_path / "d.txt").write_text("# identity\n0 0 1\n1 1 1\n")
        (tmp_path / "a.txt").write_text("1\n0\n2\n")
        (tmp_path / "b.txt").write_text("0.5\n0.5\n")
        path = tmp_path / "problem.yaml"
        path.write_text(
            "m: 3\n"
            "n: 2\n"
            f"field: {field}\n"
            "terms:\n"
            f"  - {{C: c.txt, D: d.txt, coefficient: {coefficient}}}\n"
            "sources:\n"
            "  - {a: a.txt, b: b.txt}\n"
            "initial: {rank: 2, seed: 4}\n"
        )
        return path

    def test_valid_file(self, tmp_path):
        loaded = load_problem_file(self._write(tmp_path, coefficient="cos"))
        assert loaded.rhs.shape == (3, 2)
        assert loaded.initial.rank == 2
        C = np.array([[1.0, 0, 0], [0, 0, -0.5], [0, 0.5, 0]])
        Y = np.arange(6.0).reshape(3, 2)
        expected = np.cos(0.4) * C @ Y + np.outer([1, 0, 2], [0.5, 0.5])
        assert np.allclose(loaded.rhs.eval_full(0.4, Y), expected, atol=1e-14)

    def test_unknown_coefficient(self, tmp_path):
        with pytest.raises(ConfigError):
            load_problem_file(self._write(tmp_path, coefficient="tan"))

    def test_index_out_of_range(self, tmp_path):
        with pytest.raises(ConfigError):
            load_problem_file(self._write(tmp_path, c_rows="3 0 1.0\n"))

    def test_complex_values_in_real_problem(self, tmp_path):
        with pytest.raises(ConfigError):
            load_problem_file(self._write(tmp_path, c_rows="0 0 1.0 2.0\n"))

    def test_complex_problem_declared(self, tmp_path):
        loaded = load_problem_file(self._write(tmp_path, field="complex", c_rows="0 0 1.0 2.0\n"))
        assert loaded.rhs.field is ScalarField.COMPLEX

    def test_duplicate_triplets_summed(self, tmp_path):
        path = tmp_path / "dup.txt"
        path.write_text("0 1 1.0\n0 1 2.5\n")
        assert read_triplets(path, (2, 2))[0, 1] == 3.5

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_problem_file(tmp_path / "nope.yaml")


class TestRegistry:
    """Problem construction from ProblemSpec."""

    def test_all_builtin_kinds(self):
        schrodinger = build_problem(ProblemSpec(kind=ProblemKind.SCHRODINGER, n=12), rank=3, seed=1)
        assert schrodinger.initial.rank == 3
        assert schrodinger.reference_initial.shape == (12, 12)
        assert np.linalg.matrix_rank(schrodinger.reference_initial, tol=1e-14) == 12
        assert schrodinger.exact is None

        synthetic = build_problem(
            ProblemSpec(kind=ProblemKind.SYNTHETIC, m=8, n=6, exact_rank=2), rank=2, seed=0
        )
        assert synthetic.exact is not None
        assert np.allclose(synthetic.exact(0.0), synthetic.reference_initial)

        lattice = build_problem(ProblemSpec(kind=ProblemKind.LATTICE, n_xy=7, moment_order=1), rank=2)
        assert lattice.lattice is not None
        assert lattice.initial.shape == (49, 4)

    def test_file_kind_requires_path(self):
        with pytest.raises(ConfigError):
            build_problem(ProblemSpec(kind=ProblemKind.FILE), rank=1)
