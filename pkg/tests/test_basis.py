import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.polynomial import hermite_e

from cvpc.basis import (Scheme, build_basis, eval_basis, hermite_eval_univariate,
                        hermite_table, hermite_triple_1d, term_count, triple_products)


def gauss_hermite(n_nodes: int, n_zeta: int):
    """Tensor Gauss-Hermite rule for independent standard normals."""
    x, w = hermite_e.hermegauss(n_nodes)
    w = w / math.sqrt(2 * math.pi)
    nodes = np.array(list(itertools.product(x, repeat=n_zeta)))
    weights = np.prod(np.array(list(itertools.product(w, repeat=n_zeta))), axis=1)
    return nodes, weights


class TestUnivariateHermite:
    def test_constant(self):
        assert hermite_eval_univariate(0, 3.7) == 1.0

    def test_degree_two_at_origin(self):
        assert hermite_eval_univariate(2, 0.0) == pytest.approx(-1 / math.sqrt(2), abs=1e-15)

    def test_degree_three_at_one(self):
        assert hermite_eval_univariate(3, 1.0) == pytest.approx(-2 / math.sqrt(6), abs=1e-15)

    @pytest.mark.parametrize("n", range(0, 16))
    def test_matches_classical_polynomials(self, n):
        z = np.linspace(-4, 4, 17)
        coef = np.zeros(n + 1)
        coef[n] = 1.0
        expected = hermite_e.hermeval(z, coef) / math.sqrt(math.factorial(n))
        np.testing.assert_allclose(hermite_eval_univariate(n, z), expected, rtol=1e-10, atol=1e-10)

    def test_table_agrees_with_single_evaluation(self):
        z = np.array([-1.3, 0.2, 2.5])
        table = hermite_table(z, 6)
        for n in range(7):
            np.testing.assert_allclose(table[:, n], hermite_eval_univariate(n, z), rtol=1e-14)

    def test_negative_degree_rejected(self):
        with pytest.raises(ValueError):
            hermite_eval_univariate(-1, 0.0)


class TestTripleProducts1D:
    def test_one_one_two(self):
        assert hermite_triple_1d(1, 1, 2) == pytest.approx(math.sqrt(2), rel=1e-15)

    def test_parity_zero(self):
        assert hermite_triple_1d(1, 2, 2) == 0.0

    def test_triangle_zero(self):
        assert hermite_triple_1d(0, 1, 3) == 0.0

    def test_against_quadrature(self):
        x, w = hermite_e.hermegauss(20)
        w = w / math.sqrt(2 * math.pi)
        for a, b, c in itertools.product(range(7), repeat=3):
            q = np.sum(w * hermite_eval_univariate(a, x) * hermite_eval_univariate(b, x)
                       * hermite_eval_univariate(c, x))
            assert hermite_triple_1d(a, b, c) == pytest.approx(q, abs=1e-10)


class TestBasisConstruction:
    def test_two_dims_degree_two_order(self):
        basis = build_basis(2, 2, Scheme.TOTAL_ORDER)
        assert basis.indices.tolist() == [[0, 0], [1, 0], [0, 1], [2, 0], [1, 1], [0, 2]]

    def test_three_dims_degree_three_count(self):
        brute = [m for m in itertools.product(range(4), repeat=3) if sum(m) <= 3]
        assert build_basis(3, 3).size == len(brute) == 20

    def test_tensor_two_dims_degree_one(self):
        assert build_basis(2, 1, "tensor-product").size == 4

    @given(st.integers(1, 4), st.integers(0, 5), st.sampled_from(list(Scheme)))
    @settings(max_examples=60, deadline=None)
    def test_count_matches_enumeration(self, n, p, scheme):
        grid = itertools.product(range(p + 1), repeat=n)
        if scheme is Scheme.TOTAL_ORDER:
            expected = {m for m in grid if sum(m) <= p}
        else:
            expected = set(grid)
        basis = build_basis(n, p, scheme)
        assert term_count(n, p, scheme) == basis.size == len(expected)
        assert {tuple(m) for m in basis.indices.tolist()} == expected
        degrees = basis.indices.sum(axis=1)
        assert np.all(np.diff(degrees) >= 0)

    def test_linear_positions(self):
        basis = build_basis(3, 2)
        for d in range(3):
            e = [0, 0, 0]
            e[d] = 1
            assert basis.indices[basis.linear_position(d)].tolist() == e
            assert basis.linear_position(d) == d + 1
        assert build_basis(3, 0).linear_position(1) is None

    def test_term_cap(self):
        with pytest.raises(ValueError, match="cap"):
            build_basis(4, 10, max_terms=100)

    @pytest.mark.parametrize("n,p", [(0, 1), (2, -1)])
    def test_invalid_arguments(self, n, p):
        with pytest.raises(ValueError):
            build_basis(n, p)

    def test_normalization_factors(self):
        basis = build_basis(2, 2)
        np.testing.assert_allclose(basis.normalization(),
                                   np.sqrt([1, 1, 1, 2, 1, 2]))


class TestEvaluation:
    def test_origin_two_dims(self):
        basis = build_basis(2, 2)
        r = -1 / math.sqrt(2)
        np.testing.assert_allclose(eval_basis(basis, [0.0, 0.0]), [1, 0, 0, r, 0, r], atol=1e-15)

    def test_one_dim_linear(self):
        np.testing.assert_allclose(eval_basis(build_basis(1, 1), [1.5]), [1.0, 1.5])

    def test_batch_shape(self):
        z = np.random.default_rng(0).standard_normal((9, 3))
        vals = eval_basis(build_basis(3, 2), z)
        assert vals.shape == (9, 10)
        np.testing.assert_array_equal(vals[:, 0], 1.0)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            eval_basis(build_basis(2, 1), np.zeros((4, 3)))

    @pytest.mark.parametrize("n,p", [(1, 4), (2, 3), (3, 2)])
    def test_orthonormal_by_quadrature(self, n, p):
        basis = build_basis(n, p)
        nodes, weights = gauss_hermite(p + 2, n)
        phi = eval_basis(basis, nodes)
        gram = phi.T @ (weights[:, None] * phi)
        np.testing.assert_allclose(gram, np.eye(basis.size), atol=1e-10)


class TestInnerProductTensors:
    @pytest.mark.parametrize("n,p,scheme", [(1, 4, "total-order"), (2, 3, "total-order"),
                                            (2, 2, "tensor-product"), (3, 2, "total-order")])
    def test_against_quadrature(self, n, p, scheme):
        basis = build_basis(n, p, scheme)
        tensors = triple_products(basis)
        nodes, weights = gauss_hermite(3 * basis.indices.max() // 2 + 2, n)
        phi = eval_basis(basis, nodes)
        full = np.einsum("q,qi,qj,qk->ijk", weights, phi, phi, phi)
        dense = np.zeros_like(full)
        dense[tensors.i, tensors.j, tensors.k] = tensors.vals
        np.testing.assert_allclose(dense, full, atol=1e-10)

    def test_constant_slice_is_identity(self):
        basis = build_basis(3, 2)
        t = triple_products(basis)
        np.testing.assert_allclose(t.slice_matrix(0).toarray(), np.eye(basis.size), atol=1e-15)

    def test_symmetric_lookup(self):
        t = triple_products(build_basis(1, 2))
        assert t.get(1, 1, 2) == t.get(2, 1, 1) == pytest.approx(math.sqrt(2))

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=25, deadline=None)
    def test_contraction_projects_products(self, seed):
        basis = build_basis(2, 3)
        rng = np.random.default_rng(seed)
        a, b = rng.standard_normal((2, basis.size))
        got = triple_products(basis).contraction_matrix() @ np.kron(a, b)
        nodes, weights = gauss_hermite(6, 2)
        phi = eval_basis(basis, nodes)
        expected = phi.T @ (weights * (phi @ a) * (phi @ b))
        np.testing.assert_allclose(got, expected, atol=1e-10)


class TestHighDegree:
    def test_triple_product_log_branch_is_continuous(self):
        """Large degrees switch to log-space arithmetic without a jump."""
        for a in (60, 90, 150):
            direct = math.exp(0.5 * 3 * math.lgamma(a + 1) - 3 * math.lgamma(a // 2 + 1))
            assert hermite_triple_1d(a, a, a) == pytest.approx(direct, rel=1e-10)
        assert hermite_triple_1d(1, 150, 151) == pytest.approx(math.sqrt(151), rel=1e-10)
