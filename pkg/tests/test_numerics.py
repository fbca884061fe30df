import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import solve_sylvester as scipy_sylvester

from gzsl.errors import KTooLarge, NonSquare, NotSymmetric, SingularPencil, ZeroVector
from gzsl.numerics import graph_laplacian, knn_cosine_graph, solve_sylvester, sym_eig

from helpers import random_laplacian, random_spd


def det_by_minors(a):
    if a.shape == (1, 1):
        return a[0, 0]
    return sum((-1) ** j * a[0, j] * det_by_minors(np.delete(a[1:], j, axis=1)) for j in range(a.shape[0]))


class TestSymEig:
    def test_identity(self):
        e = sym_eig(np.eye(3))
        np.testing.assert_allclose(e.values, [1, 1, 1])
        np.testing.assert_allclose(e.vectors.T @ e.vectors, np.eye(3), atol=1e-12)

    def test_two_by_two(self):
        # characteristic polynomial (2 - x)^2 - 1 has roots 1 and 3
        np.testing.assert_allclose(sym_eig([[2.0, 1.0], [1.0, 2.0]]).values, [1.0, 3.0], atol=1e-14)

    @pytest.mark.parametrize("n", [1, 2, 5, 8, 17, 40])
    def test_reconstruction(self, rng, n):
        a = rng.normal(size=(n, n))
        a = a + a.T
        e = sym_eig(a)
        recon = e.vectors @ np.diag(e.values) @ e.vectors.T
        assert np.linalg.norm(recon - a) <= 1e-8 * (1 + np.linalg.norm(a))
        assert np.linalg.norm(e.vectors.T @ e.vectors - np.eye(n)) <= 1e-8
        assert np.all(np.diff(e.values) >= 0)
        np.testing.assert_allclose(e.values, np.linalg.eigvalsh(a), atol=1e-9 * (1 + np.abs(a).max()))

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 4), st.integers(0, 2**32 - 1))
    def test_trace_and_determinant(self, n, seed):
        rng = np.random.default_rng(seed)
        a = rng.normal(size=(n, n))
        a = a + a.T
        vals = sym_eig(a).values
        assert abs(vals.sum() - np.trace(a)) <= 1e-9 * (1 + abs(np.trace(a)) + np.abs(a).sum())
        assert abs(np.prod(vals) - det_by_minors(a)) <= 1e-9 * (1 + np.abs(a).max()) ** n

    def test_repeated_and_zero_matrix(self):
        np.testing.assert_allclose(sym_eig(np.zeros((4, 4))).values, 0.0)
        a = np.diag([2.0, 2.0, 5.0])
        np.testing.assert_allclose(sym_eig(a).values, [2, 2, 5])

    def test_errors(self):
        with pytest.raises(NonSquare):
            sym_eig(np.ones((2, 3)))
        with pytest.raises(NotSymmetric):
            sym_eig([[1.0, 2.0], [0.0, 1.0]])


class TestSylvester:
    def test_zero_b(self, rng):
        a, c = random_spd(rng, 4), rng.normal(size=(4, 3))
        np.testing.assert_allclose(solve_sylvester(a, np.zeros((3, 3)), c), np.linalg.solve(a, c), atol=1e-10)

    def test_identity_pair(self, rng):
        c = rng.normal(size=(3, 5))
        np.testing.assert_allclose(solve_sylvester(np.eye(3), np.eye(5), c), c / 2, atol=1e-14)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(1, 20), st.integers(1, 20), st.integers(0, 2**32 - 1))
    def test_residual_and_scipy_oracle(self, m, n, seed):
        rng = np.random.default_rng(seed)
        a, b, c = random_spd(rng, m), random_laplacian(rng, n), rng.normal(size=(m, n))
        x = solve_sylvester(a, b, c)
        assert np.linalg.norm(a @ x + x @ b - c) <= 1e-8 * (1 + np.linalg.norm(c))
        np.testing.assert_allclose(x, scipy_sylvester(a, b, c), atol=1e-8 * (1 + np.abs(x).max()))

    def test_singular_pencil(self):
        with pytest.raises(SingularPencil):
            solve_sylvester(np.zeros((2, 2)), np.zeros((3, 3)), np.ones((2, 3)))


def brute_knn(h, k):
    """Exhaustive oracle over column vectors."""
    n = h.shape[1]
    cos = np.array([[h[:, i] @ h[:, j] / np.linalg.norm(h[:, i]) / np.linalg.norm(h[:, j])
                     for j in range(n)] for i in range(n)])
    top = []
    for i in range(n):
        cands = sorted((j for j in range(n) if j != i), key=lambda j: (-cos[i, j], j))
        top.append(set(cands[:k]))
    w = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j and (j in top[i] or i in top[j]):
                w[i, j] = cos[i, j]
    return w


class TestGraph:
    def test_identical_pair(self):
        w = knn_cosine_graph(np.array([[1.0, 2.0], [1.0, 2.0]]), 1).weights
        np.testing.assert_allclose(w, [[0, 1], [1, 0]])

    def test_orthogonal_pair(self):
        np.testing.assert_allclose(knn_cosine_graph(np.eye(2), 1).weights, np.zeros((2, 2)))

    @pytest.mark.parametrize("seed", range(10))
    def test_brute_force(self, seed):
        rng = np.random.default_rng(seed)
        h = rng.normal(size=(4, 6))
        g = knn_cosine_graph(h, 2)
        np.testing.assert_allclose(g.weights, brute_knn(h, 2), atol=1e-12)
        assert np.array_equal(g.weights, g.weights.T)
        assert g.neighbor_count == 2

    def test_feature_axis_uses_rows(self, rng):
        h = rng.normal(size=(6, 4))
        np.testing.assert_array_equal(
            knn_cosine_graph(h, 3, axis="features").weights, knn_cosine_graph(h.T, 3).weights
        )

    def test_ties_go_to_lower_index(self):
        # vertex 0 is equally similar to 1 and 2
        h = np.array([[1.0, 1.0, 1.0, -1.0], [0.0, 1.0, -1.0, 0.0]])
        w = knn_cosine_graph(h, 1).weights
        np.testing.assert_allclose(w, brute_knn(h, 1))
        # vertex 3 is equally far from 1 and 2 and must pick 1
        assert w[1, 3] != 0.0 and w[2, 3] == 0.0

    def test_errors(self):
        with pytest.raises(ZeroVector):
            knn_cosine_graph(np.array([[1.0, 0.0], [1.0, 0.0]]), 1)
        with pytest.raises(KTooLarge):
            knn_cosine_graph(np.ones((2, 3)), 3)

    def test_laplacian_examples(self):
        np.testing.assert_array_equal(graph_laplacian(np.array([[0.0, 1.0], [1.0, 0.0]])), [[1, -1], [-1, 1]])
        np.testing.assert_array_equal(graph_laplacian(np.zeros((3, 3))), np.zeros((3, 3)))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(2, 12), st.integers(0, 2**32 - 1))
    def test_laplacian_quadratic_form_and_psd(self, n, seed):
        rng = np.random.default_rng(seed)
        h = np.abs(rng.normal(size=(3, n))) + 0.01  # nonnegative data gives nonnegative weights
        w = knn_cosine_graph(h, min(2, n - 1)).weights
        lap = graph_laplacian(w)
        x = rng.normal(size=n)
        pairwise = 0.5 * sum(w[k, l] * (x[k] - x[l]) ** 2 for k in range(n) for l in range(n))
        assert abs(x @ lap @ x - pairwise) <= 1e-10 * (1 + abs(pairwise))
        np.testing.assert_allclose(lap.sum(axis=1), 0.0, atol=1e-12)
        assert sym_eig(lap).values.min() >= -1e-10
