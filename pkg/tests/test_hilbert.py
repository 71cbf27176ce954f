import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from arhlab.hilbert import (Curve, Grid, GridMismatchError, OperatorMatrix, Sample, derivative,
                            eigendecompose, inner_product, norm, op_norms, orthonormalize,
                            tensor_product, trapezoid_weights)
from arhlab.simulate import fourier_basis

G = Grid.uniform(41)
finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
vec = arrays(np.float64, G.size, elements=finite)


def curve(f, grid=G):
    return Curve.from_function(grid, f)


def basis(grid, k):
    F = fourier_basis(grid, k)
    return [Curve(grid, F[i]) for i in range(k)]


class TestGrid:
    def test_default_is_101_trapezoid(self):
        g = Grid.uniform()
        assert g.size == 101
        assert g.weights.sum() == pytest.approx(1.0, abs=1e-14)
        assert g.weights[0] == pytest.approx(0.005)

    def test_rejects_bad_nodes(self):
        with pytest.raises(ValueError):
            Grid.uniform(1)
        with pytest.raises(ValueError):
            Grid(np.array([0.0, 0.7, 0.5, 1.0]), trapezoid_weights([0.0, 0.7, 0.5, 1.0]))

    def test_product_roundtrip(self):
        g2 = G.product(3)
        assert g2.blocks == 3 and g2.weights.sum() == pytest.approx(3.0)
        assert Grid.from_points(g2.points).same_as(g2)

    def test_mismatch_raises(self):
        with pytest.raises(GridMismatchError):
            inner_product(Curve.zeros(G), Curve.zeros(Grid.uniform(11)))


class TestInnerProduct:
    def test_constant_one(self):
        one = curve(lambda t: np.ones_like(t), Grid.uniform())
        assert inner_product(one, one) == pytest.approx(1.0, abs=1e-14)

    def test_t_squared(self):
        u = curve(lambda t: t, Grid.uniform())
        assert abs(norm(u) ** 2 - 1 / 3) <= 1e-4

    def test_zero(self):
        assert inner_product(curve(np.sin), Curve.zeros(G)) == 0.0

    @given(vec, vec)
    def test_symmetric_nonnegative(self, a, b):
        u, v = Curve(G, a), Curve(G, b)
        assert inner_product(u, v) == inner_product(v, u)
        assert inner_product(u, u) >= -1e-12
        assert inner_product(u, v, "Sobolev21") == inner_product(v, u, "Sobolev21")

    def test_sobolev_adds_derivative_term(self):
        u = curve(lambda t: t)
        assert inner_product(u, u, "Sobolev21") == pytest.approx(1 / 3 + 1.0, abs=2e-3)

    def test_unknown_space(self):
        with pytest.raises(ValueError):
            inner_product(Curve.zeros(G), Curve.zeros(G), "H3")


class TestOperators:
    def test_identity_action(self):
        x = curve(lambda t: np.cos(3 * t))
        assert np.allclose(OperatorMatrix.identity(G).apply(x).values, x.values, atol=1e-10)

    def test_zero_operator(self):
        assert np.all(OperatorMatrix.zeros(G).apply(curve(np.exp)).values == 0)

    def test_rank_one_action(self):
        u, v, x = curve(np.sin), curve(np.cos), curve(lambda t: t**2)
        got = tensor_product(u, v).apply(x)
        assert np.allclose(got.values, inner_product(v, x) * u.values, atol=1e-10)

    def test_projector_on_unit_vector(self):
        e1, e2 = basis(G, 2)
        P = tensor_product(e1, e1)
        assert np.allclose(P.apply(e1).values, e1.values, atol=1e-10)
        assert np.allclose(P.apply(e2).values, 0, atol=1e-10)

    @given(vec, vec)
    @settings(max_examples=50)
    def test_hs_of_tensor(self, a, b):
        u, v = Curve(G, a), Curve(G, b)
        assert tensor_product(u, v).hs_norm() == pytest.approx(norm(u) * norm(v), rel=1e-8, abs=1e-8)

    @given(vec, vec, vec)
    @settings(max_examples=50)
    def test_tensor_action_pointwise(self, a, b, c):
        u, v, x = Curve(G, a), Curve(G, b), Curve(G, c)
        lhs = tensor_product(u, v).apply(x).values
        assert np.allclose(lhs, inner_product(v, x) * u.values, atol=1e-10 * (1 + np.abs(lhs).max()))

    def test_norms_of_diagonal(self):
        e = basis(G, 2)
        A = OperatorMatrix.from_eigen(G, [1.0, 0.5], np.array([e[0].values, e[1].values]))
        n = op_norms(A)
        assert n.operator_norm == pytest.approx(1.0, abs=1e-10)
        assert n.hs_norm == pytest.approx(math.sqrt(1.25), abs=1e-10)
        assert n.trace_norm == pytest.approx(1.5, abs=1e-10)
        assert op_norms(OperatorMatrix.zeros(G)) == (0.0, 0.0, 0.0)

    def test_hs_basis_independent(self, rng):
        A = OperatorMatrix(G, rng.standard_normal((G.size, G.size)))
        # HS^2 = sum_p ||A e_p||^2 over two different orthonormal bases of the grid space
        Q1 = orthonormalize(G, rng.standard_normal((G.size, G.size)))
        Q2 = orthonormalize(G, rng.standard_normal((G.size, G.size)))
        hs = [math.sqrt(sum(norm(A.apply(Curve(G, q))) ** 2 for q in Q)) for Q in (Q1, Q2)]
        assert hs[0] == pytest.approx(hs[1], rel=1e-8)
        assert hs[0] == pytest.approx(A.hs_norm(), rel=1e-8)

    def test_composition_and_adjoint(self, rng):
        A = OperatorMatrix(G, rng.standard_normal((G.size, G.size)))
        B = OperatorMatrix(G, rng.standard_normal((G.size, G.size)))
        x, y = Curve(G, rng.standard_normal(G.size)), Curve(G, rng.standard_normal(G.size))
        assert np.allclose((A @ B).apply(x).values, A.apply(B.apply(x)).values)
        assert inner_product(A.apply(x), y) == pytest.approx(inner_product(x, A.T.apply(y)), rel=1e-10)


class TestEigen:
    def test_constructed_spectrum(self):
        e = basis(G, 3)
        F = np.array([c.values for c in e])
        A = OperatorMatrix.from_eigen(G, [0.75, 0.5, 0.25], F)
        eig = eigendecompose(A, rank=3)
        assert np.allclose(eig.eigenvalues, [0.75, 0.5, 0.25], atol=1e-8)
        for i in range(3):
            assert abs(abs(inner_product(eig.eigenfunction(i), e[i])) - 1) < 1e-8

    def test_rank_one(self):
        u = curve(lambda t: 1 + t)
        eig = eigendecompose(tensor_product(u, u))
        assert eig.eigenvalues[0] == pytest.approx(norm(u) ** 2, rel=1e-10)
        assert np.all(eig.eigenvalues[1:] < 1e-10)
        assert np.allclose(np.abs(eig.functions[0]), np.abs(u.values / norm(u)), atol=1e-8)

    def test_reconstruction_converges(self, rng):
        M = rng.standard_normal((G.size, G.size))
        A = OperatorMatrix(G, M @ M.T)
        eig = eigendecompose(A)
        res = [(A - eig.reconstruct(r)).hs_norm() for r in (2, 5, 20, G.size)]
        assert res == sorted(res, reverse=True)
        assert res[-1] < 1e-8 * A.hs_norm()
        for r in (2, 5):
            bound = math.sqrt(np.sum(eig.eigenvalues[r:] ** 2))
            assert (A - eig.reconstruct(r)).hs_norm() <= bound + 1e-8
        assert A.trace() == pytest.approx(eig.eigenvalues.sum(), abs=1e-8)

    def test_rejects_asymmetric_and_negative(self, rng):
        with pytest.raises(ValueError):
            eigendecompose(OperatorMatrix(G, rng.standard_normal((G.size, G.size))))
        e1 = basis(G, 1)[0]
        with pytest.raises(ValueError):
            eigendecompose(tensor_product(e1, e1) * -1.0)


class TestDerivative:
    def test_constant_and_linear(self):
        assert np.allclose(derivative(curve(lambda t: 0 * t + 3)).values, 0, atol=1e-10)
        assert np.allclose(derivative(curve(lambda t: 2 * t - 1)).values, 2, atol=1e-10)

    def test_second_order(self):
        errs = []
        for m in (101, 401):
            g = Grid.uniform(m)
            d = derivative(curve(lambda t: np.sin(2 * np.pi * t), g))
            errs.append(np.abs(d.values - 2 * np.pi * np.cos(2 * np.pi * g.points)).max())
        order = math.log(errs[0] / errs[1]) / math.log(4)
        assert 1.8 < order < 2.2

    def test_sample_rows(self):
        s = Sample(G, np.vstack([G.points, 2 * G.points]))
        assert np.allclose(derivative(s).values, [[1.0], [2.0]])
