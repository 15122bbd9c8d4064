import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gage import (
    CenteredGramOperator,
    SparseMatrix,
    center_apply,
    classical_mds,
    gram_apply,
    mds_gram_from_distances,
    project_small,
    squared_apply,
)
from gage.centering import NegativeEigenvalueWarning

from conftest import random_sparse, traced_peak_memory
from oracles import dense_centered_gram, pairwise_sq_dists, rel_err


def make_op(n, m, seed, density=0.3):
    return CenteredGramOperator(random_sparse(n, m, density, seed))


class TestCenterApply:
    def test_annihilates_constants(self):
        assert np.allclose(center_apply(np.ones((7, 3))), 0.0, atol=1e-15)

    def test_idempotent_on_centered(self, rng):
        B = rng.standard_normal((12, 4))
        B -= B.mean(axis=0)
        assert rel_err(center_apply(B), B) < 1e-14

    def test_basis_vector_by_hand(self):
        e1 = np.zeros((3, 1))
        e1[0, 0] = 1.0
        expected = np.array([[2.0 / 3.0], [-1.0 / 3.0], [-1.0 / 3.0]])
        assert np.allclose(center_apply(e1), expected, atol=1e-15)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            center_apply(np.zeros((0, 3)))

    @settings(deadline=None, max_examples=25)
    @given(n=st.integers(2, 40), f=st.integers(1, 5), seed=st.integers(0, 10**6))
    def test_idempotence_property(self, n, f, seed):
        B = np.random.default_rng(seed).standard_normal((n, f))
        once = center_apply(B)
        assert rel_err(center_apply(once), once) < 1e-13

    def test_column_sums_vanish(self, rng):
        B = rng.standard_normal((50, 6)) * 100
        out = center_apply(B)
        bound = 50 * np.finfo(np.float64).eps * np.linalg.norm(B)
        assert np.all(np.abs(out.sum(axis=0)) <= bound)


class TestGramApply:
    def test_identity_y_reduces_to_centering(self, rng):
        op = CenteredGramOperator(SparseMatrix.identity(9))
        B = rng.standard_normal((9, 4))
        assert rel_err(gram_apply(op, B), center_apply(B)) < 1e-14

    def test_ones_in_null_space(self):
        op = make_op(15, 6, seed=2)
        assert np.allclose(gram_apply(op, np.ones((15, 1))), 0.0, atol=1e-12)

    def test_dense_oracle(self, rng):
        op = make_op(20, 7, seed=5)
        B = rng.standard_normal((20, 3))
        X = dense_centered_gram(op.y.to_dense())
        assert rel_err(gram_apply(op, B), X @ B) < 1e-11

    def test_dimension_mismatch(self, rng):
        with pytest.raises(ValueError):
            gram_apply(make_op(10, 4, seed=1), rng.standard_normal((11, 2)))

    def test_operator_symmetry(self, rng):
        op = make_op(18, 5, seed=9)
        B1 = rng.standard_normal((18, 3))
        B2 = rng.standard_normal((18, 4))
        left = B1.T @ gram_apply(op, B2)
        right = (B2.T @ gram_apply(op, B1)).T
        assert rel_err(left, right) < 1e-11

    def test_no_dense_n_by_n_allocation(self):
        n = 3000
        op = CenteredGramOperator(random_sparse(n, n, 3e-3, seed=4))
        B = np.random.default_rng(0).standard_normal((n, 8))
        gram_apply(op, B)  # warm up caches and lazy imports
        with traced_peak_memory() as mem:
            gram_apply(op, B)
        assert mem["peak_bytes"] < 8 * n * n * 0.1, mem


class TestSquaredApply:
    def test_ones_null_space(self):
        op = make_op(12, 5, seed=3)
        assert np.allclose(squared_apply(op, np.ones((12, 2))), 0.0, atol=1e-10)

    def test_identity_y_idempotent_centering(self, rng):
        op = CenteredGramOperator(SparseMatrix.identity(8))
        B = rng.standard_normal((8, 3))
        assert rel_err(squared_apply(op, B), center_apply(B)) < 1e-13

    def test_composition_oracle(self, rng):
        op = make_op(16, 6, seed=8)
        B = rng.standard_normal((16, 4))
        assert rel_err(squared_apply(op, B), gram_apply(op, gram_apply(op, B))) < 1e-12


class TestProjectSmall:
    def test_eigenbasis_diagonalizes(self, rng):
        op = make_op(20, 9, seed=6)
        X = dense_centered_gram(op.y.to_dense())
        vals, vecs = np.linalg.eigh(X)
        V = vecs[:, ::-1][:, :4]
        S = project_small(op, V)
        assert np.max(np.abs(S - np.diag(np.diag(S)))) < 1e-9
        assert np.allclose(np.diag(S), vals[::-1][:4], rtol=1e-9, atol=1e-9)

    def test_ones_column_gives_zero(self):
        op = make_op(10, 3, seed=7)
        S = project_small(op, np.ones((10, 1)))
        assert abs(S[0, 0]) < 1e-12

    def test_random_projection_oracle(self, rng):
        op = make_op(14, 6, seed=10)
        V = rng.standard_normal((14, 3))
        X = dense_centered_gram(op.y.to_dense())
        assert rel_err(project_small(op, V), V.T @ X @ V) < 1e-11


class TestMdsGramFromDistances:
    def test_two_points_on_line(self):
        D2 = np.array([[0.0, 1.0], [1.0, 0.0]])
        expected = np.array([[0.25, -0.25], [-0.25, 0.25]])
        assert np.allclose(mds_gram_from_distances(D2), expected, atol=1e-15)

    def test_zeros(self):
        assert np.allclose(mds_gram_from_distances(np.zeros((4, 4))), 0.0)

    def test_forward_generation_oracle(self, rng):
        E = rng.standard_normal((10, 3))
        D2 = pairwise_sq_dists(E)
        Ec = E - E.mean(axis=0)
        assert rel_err(mds_gram_from_distances(D2), Ec @ Ec.T) < 1e-10

    def test_invalid_inputs_rejected(self, rng):
        D = np.abs(rng.standard_normal((4, 4)))
        with pytest.raises(ValueError):
            mds_gram_from_distances(D)  # asymmetric, nonzero diagonal
        D2 = np.zeros((3, 3))
        D2[0, 1] = D2[1, 0] = -1.0
        with pytest.raises(ValueError):
            mds_gram_from_distances(D2)


class TestClassicalMds:
    def test_gram_reconstruction(self, rng):
        E = rng.standard_normal((10, 2))
        E -= E.mean(axis=0)
        G = E @ E.T
        Ehat = classical_mds(G, 2)
        assert rel_err(Ehat @ Ehat.T, G) < 1e-9

    def test_zero_gram(self):
        assert np.allclose(classical_mds(np.zeros((5, 5)), 2), 0.0)

    def test_rank_one_by_hand(self, rng):
        v = rng.standard_normal(6)
        E = classical_mds(np.outer(v, v), 1)
        # eigenvector v/|v| scaled by |v| recovers ±v
        assert min(rel_err(E[:, 0], v), rel_err(E[:, 0], -v)) < 1e-10

    def test_rank_too_large_rejected(self):
        with pytest.raises(ValueError):
            classical_mds(np.eye(3), 4)

    def test_negative_eigenvalues_clamped_with_warning(self):
        G = np.diag([2.0, -1.0])
        with pytest.warns(NegativeEigenvalueWarning):
            E = classical_mds(G, 2)
        assert np.allclose(E[:, 1], 0.0)


class TestDistanceConsistency:
    def test_centered_gram_encodes_row_distances(self):
        # Result-1 premise at N <= 30
        for seed in range(5):
            rng = np.random.default_rng(seed)
            n = int(rng.integers(5, 31))
            Y = random_sparse(n, int(rng.integers(2, 12)), 0.4, seed=seed + 50)
            Yd = Y.to_dense()
            X = dense_centered_gram(Yd)
            D2 = pairwise_sq_dists(Yd)
            lhs = np.add.outer(np.diag(X), np.diag(X)) - 2 * X
            assert rel_err(lhs, D2) < 1e-9
            assert rel_err(mds_gram_from_distances(D2), X) < 1e-9
