import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hights import complex as cx
from hights.temporal import ConfigError

from conftest import brute_force_rips, random_cloud, triangle_complex


class TestPatch:
    def test_long_series(self):
        P = cx.patch(np.arange(178.0), 20)
        assert P.shape == (20, 8)
        assert P[-1, -1] == 159.0

    def test_single_patch(self):
        x = np.arange(9.0)
        np.testing.assert_array_equal(cx.patch(x, 1), [x])

    def test_exact_division(self):
        P = cx.patch(np.arange(80.0), 20)
        assert P.shape == (20, 4)
        np.testing.assert_array_equal(P.reshape(-1), np.arange(80.0))

    def test_too_many_vertices(self):
        with pytest.raises(ConfigError):
            cx.patch(np.zeros(5), 6)


class TestSimilarity:
    def test_equal_points(self):
        assert cx.similarity_matrix(np.array([[2.0, 1.0], [2.0, 1.0]]))[0, 1] == pytest.approx(1.0, abs=1e-15)

    def test_orthogonal(self):
        assert cx.similarity_matrix(np.array([[1.0, 0.0], [0.0, 3.0]]))[0, 1] == 0.0

    def test_diagonal_pair(self):
        S = cx.similarity_matrix(np.array([[1.0, 0.0], [1.0, 1.0]]))
        assert S[0, 1] == pytest.approx(1 / math.sqrt(2), abs=1e-12)
        assert S[0, 1] == pytest.approx(0.7071, abs=1e-4)

    def test_zero_point_isolated(self):
        S = cx.similarity_matrix(np.array([[0.0, 0.0], [1.0, 1.0], [1.0, 0.9]]))
        assert S[0, 1] == S[0, 2] == 0.0 and S[0, 0] == 1.0

    def test_direct_loop(self, rng):
        P = rng.normal(size=(7, 4))
        S = cx.similarity_matrix(P)
        for i in range(7):
            for j in range(7):
                ref = sum(P[i] * P[j]) / math.sqrt(sum(P[i] ** 2) * sum(P[j] ** 2))
                assert abs(S[i, j] - ref) < 1e-12


class TestCutoff:
    def test_interpolated(self):
        # 5 points -> 10 pairs; fill them with 0.1 .. 1.0
        S = np.eye(5)
        iu = np.triu_indices(5, 1)
        S[iu] = np.arange(1, 11) / 10
        S = S + np.triu(S, 1).T
        # sorted 0.1..1.0; position 0.9 * 9 = 8.1 -> 0.9 + 0.1 * 0.1
        assert cx.cutoff_from_percentile(S, 0.1) == pytest.approx(0.91, abs=1e-12)

    def test_constant(self):
        S = np.full((4, 4), 0.3)
        np.fill_diagonal(S, 1.0)
        assert cx.cutoff_from_percentile(S, 0.2) == pytest.approx(0.3, abs=1e-15)

    def test_monotone_in_q(self, rng):
        S = cx.similarity_matrix(rng.normal(size=(9, 3)))
        cs = [cx.cutoff_from_percentile(S, q) for q in (0.5, 0.3, 0.1, 0.05)]
        assert all(a <= b for a, b in zip(cs, cs[1:]))

    def test_needs_two_points(self):
        with pytest.raises(ValueError):
            cx.cutoff_from_percentile(np.eye(1), 0.1)


class TestRips:
    def test_identical_points(self):
        K = cx.build_rips(np.ones((3, 4)), 1.0)
        assert K.counts == (3, 3, 1)

    def test_orthogonal_points(self):
        K = cx.build_rips(np.eye(4), 0.5)
        assert K.counts == (4, 0, 0)

    @pytest.mark.parametrize("seed", range(40))
    def test_brute_force(self, seed):
        P, q = random_cloud(np.random.default_rng(seed))
        S = cx.similarity_matrix(P)
        c = cx.cutoff_from_percentile(S, q)
        K = cx.build_rips(P, c, S=S)
        assert [list(level) for level in K.simplexes] == brute_force_rips(S, c)

    @pytest.mark.parametrize("seed", range(20))
    def test_closure_and_threshold(self, seed):
        P, q = random_cloud(np.random.default_rng(100 + seed))
        S = cx.similarity_matrix(P)
        c = cx.cutoff_from_percentile(S, q)
        K = cx.build_rips(P, c, S=S)
        edges, verts = set(K.simplexes[1]), set(K.simplexes[0])
        for i, j, k in K.simplexes[2]:
            assert {(i, j), (i, k), (j, k)} <= edges
        for i, j in edges:
            assert {(i,), (j,)} <= verts and S[i, j] >= c
        for level in K.simplexes:
            assert list(level) == sorted(set(level))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10**6), st.floats(0.0, 0.9), st.floats(0.0, 0.9))
    def test_monotone_in_cutoff(self, seed, a, b):
        P = np.random.default_rng(seed).normal(size=(8, 3))
        lo, hi = sorted((a, b))
        small, big = cx.build_rips(P, hi), cx.build_rips(P, lo)
        for k in range(3):
            assert set(small.simplexes[k]) <= set(big.simplexes[k])

    def test_relabelling(self, rng):
        P = rng.normal(size=(9, 3))
        perm = rng.permutation(9)
        K, Kp = cx.build_rips(P, 0.3), cx.build_rips(P[perm], 0.3)
        relabel = {tuple(sorted(perm[list(s)])) for s in Kp.simplexes[2]}
        assert relabel == set(K.simplexes[2])
        assert Kp.counts == K.counts

    def test_bad_kmax(self):
        with pytest.raises(ValueError):
            cx.build_rips(np.eye(3), 0.5, k_max=3)


class TestOperators:
    def test_triangle_edge_adjacency(self):
        np.testing.assert_array_equal(cx.adjacency(triangle_complex(), 1), 1 - np.eye(3))

    def test_disjoint_edges(self):
        K = cx.SimplicialComplex((((0,), (1,), (2,), (3,)), ((0, 1), (2, 3)), ()))
        np.testing.assert_array_equal(cx.adjacency(K, 1), np.zeros((2, 2)))

    def test_triangle_degrees(self):
        K = triangle_complex()
        np.testing.assert_array_equal(cx.degree(K, 0), 2 * np.eye(3))
        np.testing.assert_array_equal(cx.degree(K, 1), 2 * np.eye(3))
        np.testing.assert_array_equal(cx.degree(K, 2), np.zeros((1, 1)))

    def test_single_edge_boundary(self):
        K = cx.SimplicialComplex((((0,), (1,)), ((0, 1),)))
        col = cx.boundary_matrix(K, 1)[:, 0]
        assert sorted(col.tolist()) == [-1, 1]

    def test_triangle_boundary_composition(self):
        K = triangle_complex()
        assert not (cx.boundary_matrix(K, 1) @ cx.boundary_matrix(K, 2)).any()

    def test_out_of_range(self):
        K = triangle_complex()
        with pytest.raises(ValueError):
            cx.adjacency(K, 3)
        with pytest.raises(ValueError):
            cx.boundary_matrix(K, 0)

    @pytest.mark.parametrize("seed", range(20))
    def test_identities_on_random_complexes(self, seed):
        P, q = random_cloud(np.random.default_rng(500 + seed))
        S = cx.similarity_matrix(P)
        K = cx.build_rips(P, cx.cutoff_from_percentile(S, q), S=S)
        B1, B2 = cx.boundary_matrix(K, 1), cx.boundary_matrix(K, 2)
        assert not (B1 @ B2).any()
        for k, B in ((1, B1), (2, B2)):
            A = cx.adjacency(K, k)
            G = B.T @ B
            np.fill_diagonal(G, 0)
            np.testing.assert_array_equal((G != 0).astype(np.int64), A)
        for k in range(3):
            A = cx.adjacency(K, k)
            np.testing.assert_array_equal(A, A.T)
            assert not np.diag(A).any() and set(np.unique(A)) <= {0, 1}
            np.testing.assert_array_equal(np.diag(cx.degree(K, k)), A.sum(axis=1))

    def test_normalized_operator_regular(self):
        N = cx.normalized_operator(cx.adjacency(triangle_complex(), 0))
        np.testing.assert_allclose(N, np.full((3, 3), 1 / 3), rtol=0, atol=1e-15)

    def test_normalized_operator_row_bound(self, rng):
        P, _ = random_cloud(rng)
        A = cx.adjacency(cx.build_rips(P, 0.2), 0)
        rows = cx.normalized_operator(A).sum(axis=1)
        assert np.all(rows > 0) and np.all(rows <= math.sqrt(A.sum(axis=1).max() + 1) + 1e-12)


def test_describe():
    rec = cx.describe(triangle_complex())
    assert (rec["m0"], rec["m1"], rec["m2"]) == (3, 3, 1)
    assert rec["edge_density"] == 1.0
