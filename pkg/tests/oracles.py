"""Independent dense oracles for the test suite.

Everything here is deliberately naive: dense matrices, explicit centering
matrices, materialized Khatri-Rao products, loop-based reductions.  These
paths share no code with the library kernels they are used to check.
"""

import numpy as np
from scipy.optimize import linear_sum_assignment


def centering_matrix(n: int) -> np.ndarray:
    return np.eye(n) - np.ones((n, n)) / n


def dense_centered_gram(Y: np.ndarray) -> np.ndarray:
    """J·Y·Yᵀ·J via explicit matrix products."""
    J = centering_matrix(Y.shape[0])
    return J @ Y @ Y.T @ J


def pairwise_sq_dists(Y: np.ndarray) -> np.ndarray:
    n = Y.shape[0]
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            diff = Y[i] - Y[j]
            D[i, j] = float(diff @ diff)
    return D


def khatri_rao_rowslabs(A: np.ndarray, C: np.ndarray) -> np.ndarray:
    """C⊙A for 2-row C: the stacked [A·diag(C[0]); A·diag(C[1])]."""
    return np.vstack([A * C[0][None, :], A * C[1][None, :]])


def khatri_rao_cols(Up: np.ndarray, U: np.ndarray) -> np.ndarray:
    """U′⊙U with row (j·N + i) equal to U′(j,:)∗U(i,:)."""
    n = U.shape[0]
    return (Up[:, None, :] * U[None, :, :]).reshape(n * n, U.shape[1])


def mode1_unfolding(X1: np.ndarray, X2: np.ndarray) -> np.ndarray:
    return np.vstack([X1, X2])


def mode3_unfolding(X1: np.ndarray, X2: np.ndarray) -> np.ndarray:
    """N²×2 with column k the column-major vectorization of X_k."""
    return np.stack(
        [X1.reshape(-1, order="F"), X2.reshape(-1, order="F")], axis=1
    )


def cpd_objective(X1, X2, U, Up, C) -> float:
    """Σ_k ‖X_k − U·diag(C(k,:))·U′ᵀ‖_F², normalized by Σ_k ‖X_k‖_F²."""
    total = 0.0
    denom = 0.0
    for k, X in enumerate((X1, X2)):
        R = X - (U * C[k][None, :]) @ Up.T
        total += float(np.sum(R * R))
        denom += float(np.sum(X * X))
    return total / denom


def match_columns(A: np.ndarray, B: np.ndarray):
    """Optimal column permutation/sign matching B's columns onto A's.

    Returns (perm, signs, congruences): ``B[:, perm] * signs`` is the
    best alignment, congruences are the matched |cosine| values.
    """
    An = A / np.maximum(np.linalg.norm(A, axis=0), 1e-300)
    Bn = B / np.maximum(np.linalg.norm(B, axis=0), 1e-300)
    corr = An.T @ Bn
    rows, cols = linear_sum_assignment(-np.abs(corr))
    perm = np.empty(A.shape[1], dtype=np.int64)
    signs = np.empty(A.shape[1])
    cong = np.empty(A.shape[1])
    for r, c in zip(rows, cols):
        perm[r] = c
        signs[r] = 1.0 if corr[r, c] >= 0 else -1.0
        cong[r] = abs(corr[r, c])
    return perm, signs, cong


def align_columns(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    perm, signs, _ = match_columns(A, B)
    return B[:, perm] * signs[None, :]


def max_principal_angle_sin(Q1: np.ndarray, Q2: np.ndarray) -> float:
    """sin of the largest principal angle between two orthonormal bases."""
    R = Q2 - Q1 @ (Q1.T @ Q2)
    return float(np.linalg.norm(R, 2))


def rel_err(actual, expected) -> float:
    expected = np.asarray(expected, dtype=np.float64)
    denom = max(float(np.linalg.norm(expected)), 1e-300)
    return float(np.linalg.norm(np.asarray(actual) - expected)) / denom
