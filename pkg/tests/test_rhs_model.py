"""
右端项模型测试: 投影求值一致性、投影缓存、乘加计数与算量公式
"""

import numpy as np
import pytest
import scipy.sparse as sp

from dlra.exceptions import InputError, ShapeMismatchError, StaleCacheError
from dlra.problems.schrodinger import schrodinger_build
from dlra.problems.synthetic import synthetic_exact
from dlra.rhs import (
    CallableRhs,
    MacCounter,
    SourcePair,
    SumFactorRhs,
    SumFactorTerm,
    ZeroRhs,
    cost_estimate,
    norm_compatibility_defect,
)
from dlra.utils.enums import ScalarField, SyntheticKind


def _random_rhs(seed, m, n, M=2, complex_=False, with_source=True, time_dependent=False):
    rng = np.random.default_rng(seed)
    terms = []
    for l in range(M):
        C = sp.random(m, m, density=0.2, random_state=seed * 10 + l, format="csr")
        D = sp.random(n, n, density=0.2, random_state=seed * 10 + l + 5, format="csr")
        if complex_:
            C = C + 1j * sp.random(m, m, density=0.1, random_state=seed * 10 + l + 7)
        coefficient = np.cos if (time_dependent and l == 0) else None
        terms.append(SumFactorTerm(C=C, D=D, coefficient=coefficient, label=f"t{l}"))
    sources = []
    if with_source:
        a = rng.standard_normal(m)
        b = rng.standard_normal(n)
        if complex_:
            a = a + 1j * rng.standard_normal(m)
        sources.append(SourcePair(a=a, b=b))
    return SumFactorRhs(terms, sources)


def _basis(rng, rows, cols, complex_=False):
    G = rng.standard_normal((rows, cols))
    if complex_:
        G = G + 1j * rng.standard_normal((rows, cols))
    return np.linalg.qr(G)[0]


def _rel(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300)


class TestProjectedEvaluation:
    """Projected forms agree with the composed dense evaluation."""

    @pytest.mark.parametrize("seed", range(20))
    def test_consistency_random_instances(self, seed):
        complex_ = seed % 2 == 1
        m, n = 17 + seed % 5, 13 + seed % 3
        rhs = _random_rhs(seed, m, n, complex_=complex_, time_dependent=seed % 4 == 0)
        rng = np.random.default_rng(1000 + seed)
        p, q = 3, 4
        U = _basis(rng, m, p, complex_)
        V = _basis(rng, n, q, complex_)
        K = rng.standard_normal((m, q))
        L = rng.standard_normal((n, p))
        S = rng.standard_normal((p, q))
        t = 0.37

        F_K = rhs.eval_full(t, K @ V.conj().T) @ V
        F_L = rhs.eval_full(t, U @ L.conj().T).conj().T @ U
        F_S = U.conj().T @ rhs.eval_full(t, U @ S @ V.conj().T) @ V
        assert _rel(rhs.eval_K(t, K, V), F_K) < 1e-12
        assert _rel(rhs.eval_L(t, L, U), F_L) < 1e-12
        assert _rel(rhs.eval_S(t, S, U, V), F_S) < 1e-12

    def test_dense_defaults_match_structured(self, rng):
        rhs = _random_rhs(3, 10, 8)
        dense = CallableRhs(10, 8, rhs.eval_full)
        U, V = _basis(rng, 10, 2), _basis(rng, 8, 2)
        S = rng.standard_normal((2, 2))
        assert _rel(dense.eval_S(0.0, S, U, V), rhs.eval_S(0.0, S, U, V)) < 1e-12
        assert _rel(dense.eval_K(0.0, U @ S, V), rhs.eval_K(0.0, U @ S, V)) < 1e-12

    def test_eval_full_is_affine(self, rng):
        rhs = _random_rhs(4, 12, 9, complex_=True)
        X = rng.standard_normal((12, 9))
        Y = rng.standard_normal((12, 9)) + 1j * rng.standard_normal((12, 9))
        a, b = 0.7 - 0.2j, -1.3
        F0 = rhs.eval_full(0.0, np.zeros((12, 9)))
        lhs = rhs.eval_full(0.0, a * X + b * Y) - F0
        expected = a * (rhs.eval_full(0.0, X) - F0) + b * (rhs.eval_full(0.0, Y) - F0)
        assert _rel(lhs, expected) < 1e-12
        linear = schrodinger_build(10)
        Z = rng.standard_normal((10, 10))
        assert np.linalg.norm(linear.eval_full(0.0, np.zeros((10, 10)))) == 0.0
        assert _rel(linear.eval_full(0.0, 3.0 * Z), 3.0 * linear.eval_full(0.0, Z)) < 1e-14

    def test_zero_rhs(self):
        rhs = ZeroRhs(4, 3)
        assert np.array_equal(rhs(0.0, np.ones((4, 3))), np.zeros((4, 3)))

    def test_shape_errors(self, rng):
        rhs = _random_rhs(1, 9, 7)
        with pytest.raises(ShapeMismatchError):
            rhs.eval_full(0.0, np.zeros((7, 9)))
        with pytest.raises(ShapeMismatchError):
            rhs.eval_K(0.0, np.zeros((9, 2)), _basis(rng, 7, 3))
        with pytest.raises(ShapeMismatchError):
            SumFactorRhs(
                [
                    SumFactorTerm(C=sp.identity(3), D=sp.identity(4)),
                    SumFactorTerm(C=sp.identity(4), D=sp.identity(4)),
                ]
            )
        with pytest.raises(InputError):
            SumFactorRhs([])

    def test_field_inferred_from_factors(self):
        assert _random_rhs(0, 5, 5).field is ScalarField.REAL
        assert _random_rhs(0, 5, 5, complex_=True).field is ScalarField.COMPLEX
        assert schrodinger_build(8).dtype is np.complex128


class TestProjectionCache:
    """Per-step projected factor cache."""

    def test_cached_equals_uncached(self, rng):
        rhs = _random_rhs(5, 15, 11)
        U, V = _basis(rng, 15, 3), _basis(rng, 11, 3)
        cache = rhs.precompute_projected_factors(U, V)
        S = rng.standard_normal((3, 3))
        K = rng.standard_normal((15, 3))
        L = rng.standard_normal((11, 3))
        cached = rhs.eval_S(1.0, S, U, V, cache=cache)
        assert np.allclose(cached, rhs.eval_S(1.0, S, U, V), atol=1e-14)
        assert np.allclose(rhs.eval_K(1.0, K, V, cache=cache), rhs.eval_K(1.0, K, V), atol=1e-14)
        assert np.allclose(rhs.eval_L(1.0, L, U, cache=cache), rhs.eval_L(1.0, L, U), atol=1e-14)

    def test_stale_cache_detected(self, rng):
        rhs = _random_rhs(6, 12, 10)
        U, V = _basis(rng, 12, 2), _basis(rng, 10, 2)
        cache = rhs.precompute_projected_factors(U, V)
        other = _basis(rng, 10, 2)
        with pytest.raises(StaleCacheError):
            rhs.eval_K(0.0, rng.standard_normal((12, 2)), other, cache=cache)

    def test_one_sided_cache(self, rng):
        rhs = _random_rhs(7, 12, 10)
        V = _basis(rng, 10, 2)
        cache = rhs.precompute_projected_factors(None, V)
        rhs.eval_K(0.0, rng.standard_normal((12, 2)), V, cache=cache)
        with pytest.raises(StaleCacheError):
            rhs.eval_L(0.0, rng.standard_normal((10, 2)), _basis(rng, 12, 2), cache=cache)

    def test_time_dependent_terms_refuse_cache(self, rng):
        rhs = _random_rhs(8, 9, 9, time_dependent=True)
        assert not rhs.supports_projection_cache
        with pytest.raises(InputError):
            rhs.precompute_projected_factors(_basis(rng, 9, 2), _basis(rng, 9, 2))

    def test_dense_rhs_has_no_cache(self):
        rhs = CallableRhs(3, 3, lambda t, Y: -Y)
        assert rhs.precompute_projected_factors(np.eye(3), np.eye(3)) is None


class TestCostModel:
    """Closed-form operation counts and instrumented multiply-accumulates."""

    @staticmethod
    def _rederive(m, n, r, c, d, N):
        aug_K = aug_L = ode_K = ode_L = ode_S = 0
        for cl, dl in zip(c, d):
            aug_K += r * r * n * dl + r * r * m + r * m * cl
            aug_L += r * r * m * cl + r * r * n + r * n * dl
            ode_K += N * (4 * r * r * n * dl + 4 * r * r * m + 2 * r * m * cl)
            ode_L += N * (4 * r * r * m * cl + 4 * r * r * n + 2 * r * n * dl)
            ode_S += N * (4 * r * r * n * dl + 4 * r * r * m * cl + 16 * r**3)
        return aug_K, aug_L, ode_K, ode_L, ode_S

    def test_formulas_match_term_by_term(self):
        rng = np.random.default_rng(99)
        for _ in range(10):
            m, n = (int(x) for x in rng.integers(10, 10**6, size=2))
            r = int(rng.integers(1, 200))
            M = int(rng.integers(1, 6))
            c = [int(x) for x in rng.integers(1, 20, size=M)]
            d = [int(x) for x in rng.integers(1, 20, size=M)]
            N = int(rng.integers(0, 50))
            report = cost_estimate(m, n, r, M, c, d, N)
            got = (report.c_aug_K, report.c_aug_L, report.c_ode_K, report.c_ode_L, report.c_ode_S)
            assert got == self._rederive(m, n, r, c, d, N)
            assert report.total == sum(got)

    def test_invalid_parameters(self):
        with pytest.raises(InputError):
            cost_estimate(10, 10, 2, 2, [1], [1, 1], 1)
        with pytest.raises(InputError):
            cost_estimate(0, 10, 2, 1, [1], [1], 1)

    def test_sparsity_counts(self):
        rhs = schrodinger_build(20)
        c, d = rhs.sparsity_counts
        assert c == [3, 1, 1]
        assert d == [1, 3, 1]
        report = rhs.cost_report(r=4, n_ode=6)
        assert report.n_ode == 6

    def test_mac_count_within_twice_formula(self, rng):
        m = n = 200
        r = 5
        tri = sp.diags([np.ones(m - 1), -2.0 * np.ones(m), np.ones(m - 1)], [-1, 0, 1], format="csr")
        rhs = SumFactorRhs(
            [SumFactorTerm(C=tri, D=tri, label="a"), SumFactorTerm(C=2.0 * tri, D=tri, label="b")]
        )
        c, d = rhs.sparsity_counts
        report = cost_estimate(m, n, r, 2, c, d, n_ode=1)
        U, V = _basis(rng, m, r), _basis(rng, n, r)

        counter = MacCounter()
        rhs.eval_K(0.0, rng.standard_normal((m, r)), V, counter=counter)
        assert 0.5 <= counter.count / report.c_aug_K <= 2.0

        counter.reset()
        rhs.eval_L(0.0, rng.standard_normal((n, r)), U, counter=counter)
        assert 0.5 <= counter.count / report.c_aug_L <= 2.0

    def test_eval_s_mac_count_within_twice_formula(self, rng):
        m, n, r = 200, 150, 5
        rhs = SumFactorRhs(
            [
                SumFactorTerm(C=sp.diags(rng.standard_normal(m)), D=sp.identity(n), label="a"),
                SumFactorTerm(C=sp.identity(m), D=sp.diags(rng.standard_normal(n)), label="b"),
            ]
        )
        c, d = rhs.sparsity_counts
        report = cost_estimate(m, n, r, 2, c, d, n_ode=1)
        # 增广基宽度为 2r
        U, V = _basis(rng, m, 2 * r), _basis(rng, n, 2 * r)
        counter = MacCounter()
        rhs.eval_S(0.0, rng.standard_normal((2 * r, 2 * r)), U, V, counter=counter)
        assert 0.5 <= counter.count / report.c_ode_S <= 2.0


class TestNormCompatibility:
    """Random probing of Re<Z, F(Z)>."""

    def test_norm_preserving_problems(self):
        assert norm_compatibility_defect(schrodinger_build(16)) < 1e-12
        skew = synthetic_exact(12, 9, 3, SyntheticKind.SKEW, seed=0)
        assert norm_compatibility_defect(skew.rhs) < 1e-12

    def test_dissipative_problem_detected(self):
        decay = synthetic_exact(8, 6, 2, SyntheticKind.SCALAR_EXPONENTIAL, a=-1.0)
        assert norm_compatibility_defect(decay.rhs) == pytest.approx(1.0, rel=1e-12)

    def test_source_norm(self, rng):
        a, b = rng.standard_normal(6), rng.standard_normal(4)
        a2, b2 = rng.standard_normal(6), rng.standard_normal(4)
        rhs = SumFactorRhs([], [SourcePair(a=a, b=b), SourcePair(a=a2, b=b2)])
        expected = np.linalg.norm(np.outer(a, b) + np.outer(a2, b2))
        assert rhs.source_norm() == pytest.approx(expected, rel=1e-12)
