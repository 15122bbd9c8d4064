import numpy as np
import pytest

from gage import (
    CenteredGramOperator,
    OrthIterConfig,
    eig_general_small,
    orth_iter,
    squared_apply,
    sym_evd_small,
    thin_qr,
)
from gage.spectral import RankDeficiencyWarning

from conftest import random_sparse
from oracles import dense_centered_gram, match_columns, max_principal_angle_sin, rel_err


class TestThinQr:
    def test_orthonormal_input_fixed(self, rng):
        W, _ = np.linalg.qr(rng.standard_normal((12, 4)))
        Q, R = thin_qr(W)
        assert rel_err(np.abs(Q), np.abs(W)) < 1e-12
        assert rel_err(R, np.eye(4)) < 1e-12

    def test_single_scaled_column(self):
        W = np.zeros((5, 1))
        W[0, 0] = 2.0
        Q, R = thin_qr(W)
        assert np.allclose(Q[:, 0], [1, 0, 0, 0, 0])
        assert np.allclose(R, [[2.0]])

    def test_residuals_random(self, rng):
        W = rng.standard_normal((50, 5))
        Q, R = thin_qr(W)
        assert np.linalg.norm(Q.T @ Q - np.eye(5)) < 1e-12
        assert rel_err(Q @ R, W) < 1e-11
        assert np.all(np.diag(R) >= 0)
        assert np.allclose(R, np.triu(R))

    def test_wide_input_rejected(self, rng):
        with pytest.raises(ValueError):
            thin_qr(rng.standard_normal((3, 5)))

    def test_rank_deficient_redraw(self, rng):
        W = rng.standard_normal((20, 2))
        W = np.hstack([W, W[:, :1] + W[:, 1:]])  # third column dependent
        with pytest.warns(RankDeficiencyWarning):
            Q, R = thin_qr(W, rng=np.random.default_rng(0))
        assert np.linalg.norm(Q.T @ Q - np.eye(3)) < 1e-11
        assert R[2, 2] == 0.0
        assert rel_err(Q @ R, W) < 1e-11


class TestOrthIter:
    def test_diagonal_operator_top_two(self):
        D = np.diag([5.0, 4.0, 3.0, 2.0, 1.0])
        cfg = OrthIterConfig(rank=2, tol=1e-10, max_iter=500, seed=3)
        Q, info = orth_iter(lambda B: D @ B, 5, cfg)
        assert info.converged
        target = np.eye(5)[:, :2]
        assert max_principal_angle_sin(target, Q) < 1e-8

    def test_identity_operator(self):
        cfg = OrthIterConfig(rank=1, tol=1e-8, max_iter=50, seed=0)
        Q, info = orth_iter(lambda B: B, 7, cfg)
        assert info.converged
        fit = Q - Q @ (Q.T @ Q)
        assert np.linalg.norm(fit) < 1e-12
        assert abs(np.linalg.norm(Q[:, 0]) - 1.0) < 1e-12

    def test_squared_slab_sum_matches_dense_eig(self):
        # random sparse slabs, relative eigengap ~0.25 at F=3 (checked below)
        f = 3
        y1 = random_sparse(40, 40, 0.1, seed=0)
        y2 = random_sparse(40, 11, 0.3, seed=1000)
        op1, op2 = CenteredGramOperator(y1), CenteredGramOperator(y2)
        X1 = dense_centered_gram(y1.to_dense())
        X2 = dense_centered_gram(y2.to_dense())
        A = X1 @ X1 + X2 @ X2
        vals, vecs = np.linalg.eigh(A)
        vals, vecs = vals[::-1], vecs[:, ::-1]
        assert (vals[f - 1] - vals[f]) / vals[f - 1] > 0.05
        cfg = OrthIterConfig(rank=f, tol=1e-10, max_iter=2000, seed=7)
        Q, info = orth_iter(
            lambda B: squared_apply(op1, B) + squared_apply(op2, B), 40, cfg
        )
        assert info.converged
        assert max_principal_angle_sin(vecs[:, :f], Q) < 1e-7

    def test_seed_invariance_of_subspace(self):
        rot, _ = np.linalg.qr(np.random.default_rng(5).standard_normal((30, 30)))
        A = rot[:, :30] @ np.diag(np.linspace(10.0, 1.0, 30)) @ rot[:, :30].T
        A = (A + A.T) / 2
        cfg0 = OrthIterConfig(rank=4, tol=1e-11, max_iter=2000, seed=0)
        cfg1 = OrthIterConfig(rank=4, tol=1e-11, max_iter=2000, seed=99)
        Q0, _ = orth_iter(lambda B: A @ B, 30, cfg0)
        Q1, _ = orth_iter(lambda B: A @ B, 30, cfg1)
        assert max_principal_angle_sin(Q0, Q1) < 1e-7

    def test_residual_bound_on_convergence(self):
        rng = np.random.default_rng(11)
        M = rng.standard_normal((25, 6))
        A = M @ M.T
        apply = lambda B: A @ B
        cfg = OrthIterConfig(rank=3, tol=1e-9, max_iter=3000, seed=1)
        Q, info = orth_iter(apply, 25, cfg)
        assert info.converged
        AQ = apply(Q)
        resid = np.linalg.norm(AQ - Q @ (Q.T @ AQ)) / np.linalg.norm(AQ)
        assert resid < 10 * cfg.tol

    def test_operator_shape_mismatch(self):
        cfg = OrthIterConfig(rank=2, tol=1e-8, max_iter=10, seed=0)
        with pytest.raises(ValueError):
            orth_iter(lambda B: B[:-1], 6, cfg)


class TestSymEvdSmall:
    def test_diagonal(self):
        vals, vecs = sym_evd_small(np.diag([3.0, 1.0]))
        assert vals.tolist() == [3.0, 1.0]
        assert rel_err(np.abs(vecs), np.eye(2)) < 1e-14

    def test_two_by_two_by_hand(self):
        vals, vecs = sym_evd_small(np.array([[0.0, 1.0], [1.0, 0.0]]))
        assert np.allclose(vals, [1.0, -1.0])
        s = 1 / np.sqrt(2)
        assert np.allclose(np.abs(vecs), [[s, s], [s, s]])

    def test_reconstruction_random(self, rng):
        A = rng.standard_normal((8, 8))
        A = (A + A.T) / 2
        vals, vecs = sym_evd_small(A)
        assert np.linalg.norm(A @ vecs - vecs * vals[None, :]) < 1e-10 * np.linalg.norm(A)
        assert np.linalg.norm(vecs.T @ vecs - np.eye(8)) < 1e-12
        assert np.all(np.diff(vals) <= 0)

    def test_asymmetric_rejected(self):
        with pytest.raises(ValueError):
            sym_evd_small(np.array([[0.0, 1.0], [0.0, 0.0]]))


class TestEigGeneralSmall:
    def test_diagonal(self):
        vals, vecs, flag = eig_general_small(np.diag([4.0, -2.0, 7.0]))
        assert not flag
        assert vals.tolist() == [4.0, -2.0, 7.0]
        assert rel_err(np.abs(vecs), np.eye(3)) < 1e-14

    def test_forward_constructed(self, rng):
        P = rng.standard_normal((2, 2)) + 2 * np.eye(2)
        M = P @ np.diag([2.0, 5.0]) @ np.linalg.inv(P)
        vals, vecs, flag = eig_general_small(M)
        assert not flag
        assert sorted(np.round(vals, 8).tolist()) == [2.0, 5.0]
        _, _, cong = match_columns(P, vecs)
        assert np.min(cong) > 1 - 1e-8

    def test_complex_pair_flagged(self):
        # rotation-like matrix, eigenvalues 1 ± i
        M = np.array([[1.0, -1.0], [1.0, 1.0]])
        vals, vecs, flag = eig_general_small(M)
        assert flag
        assert np.allclose(vals, [1.0, 1.0])
        assert not np.iscomplexobj(vecs)

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            eig_general_small(np.array([[1.0, np.inf], [0.0, 1.0]]))

    def test_joint_diagonalization_recovery(self, rng):
        # S_k = M Λ_k Mᵀ; eig of S2·S1⁻¹ recovers M's columns
        for seed in range(5):
            r = np.random.default_rng(seed)
            M = r.standard_normal((5, 5)) + np.eye(5)
            l1 = r.uniform(0.5, 2.0, 5)
            l2 = r.uniform(0.5, 2.0, 5)
            S1 = M @ np.diag(l1) @ M.T
            S2 = M @ np.diag(l2) @ M.T
            vals, vecs, flag = eig_general_small(S2 @ np.linalg.inv(S1))
            if flag:
                continue  # off-model numerics; covered by the flag contract
            _, _, cong = match_columns(M, vecs)
            assert np.min(cong) > 0.999
