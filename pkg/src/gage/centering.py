"""Implicit doubly centered Gram operators and classical MDS machinery.

For a data matrix Y (N×M) whose rows are point coordinates, the doubly
centered Gram matrix

    X = J · Y·Yᵀ · J,      J = I − (1/N)·1·1ᵀ,

equals −½·J·D⁽²⁾·J for the matrix D⁽²⁾ of squared Euclidean distances
between Y's rows.  X is dense even for sparse Y, so it is never formed
here: :class:`CenteredGramOperator` applies it to tall-skinny blocks using
only sparse products and rank-1 centering updates.
"""

from __future__ import annotations

import warnings

import numpy as np

from .sparse import SparseMatrix, as_dense, spmm, spmm_transposed


class NegativeEigenvalueWarning(RuntimeWarning):
    """Negative eigenvalues were clamped when extracting MDS coordinates."""


class CenteredGramOperator:
    """The matrix X = J·Y·Yᵀ·J applied implicitly.

    Never instantiates X (or any other N×N dense matrix); an application to
    an N×F block costs O((nnz(Y)+N)·F).
    """

    __slots__ = ("y", "n")

    def __init__(self, y: SparseMatrix):
        if y.n_rows == 0:
            raise ValueError("operator requires at least one row")
        self.y = y
        self.n = y.n_rows

    def __repr__(self):
        return f"CenteredGramOperator(n={self.n}, nnz={self.y.nnz})"


def center_apply(B) -> np.ndarray:
    """J·B, i.e. B with its column means removed (rank-1 update, not a matmul)."""
    B = as_dense(B, "B")
    if B.shape[0] == 0:
        raise ValueError("center_apply: empty input")
    return B - B.mean(axis=0, keepdims=True)


def gram_apply(op: CenteredGramOperator, B) -> np.ndarray:
    """X·B computed as J·(Y·(Yᵀ·(J·B)))."""
    B = as_dense(B, "B")
    if B.shape[0] != op.n:
        raise ValueError(f"gram_apply: operator has n={op.n}, B has {B.shape[0]} rows")
    T = center_apply(B)
    T = spmm_transposed(op.y, T)
    T = spmm(op.y, T)
    return center_apply(T)


def squared_apply(op: CenteredGramOperator, B) -> np.ndarray:
    """X·(X·B) with the centering applied only three times (J is idempotent)."""
    B = as_dense(B, "B")
    if B.shape[0] != op.n:
        raise ValueError(f"squared_apply: operator has n={op.n}, B has {B.shape[0]} rows")
    T = center_apply(B)
    T = spmm(op.y, spmm_transposed(op.y, T))
    T = center_apply(T)
    T = spmm(op.y, spmm_transposed(op.y, T))
    return center_apply(T)


def project_small(op: CenteredGramOperator, V) -> np.ndarray:
    """Vᵀ·X·V as a symmetrized F×F matrix."""
    V = as_dense(V, "V")
    S = V.T @ gram_apply(op, V)
    return (S + S.T) / 2.0


def mds_gram_from_distances(D2) -> np.ndarray:
    """−½·J·D⁽²⁾·J for a squared-distance matrix D⁽²⁾.

    Dense by construction; intended as a test oracle and a small-input
    alternative to the implicit operators.
    """
    D2 = as_dense(D2, "D2")
    n, m = D2.shape
    if n != m:
        raise ValueError("D2 must be square")
    scale = float(np.max(np.abs(D2))) if n else 0.0
    if float(np.max(np.abs(D2 - D2.T))) > 1e-12 * max(scale, 1.0):
        raise ValueError("D2 must be symmetric")
    if np.any(np.diag(D2) != 0.0):
        raise ValueError("D2 must have a zero diagonal")
    if np.any(D2 < 0.0):
        raise ValueError("D2 must be nonnegative")
    G = -0.5 * D2
    G = G - G.mean(axis=0, keepdims=True)
    G = G - G.mean(axis=1, keepdims=True)
    return G


def classical_mds(G, rank: int) -> np.ndarray:
    """Coordinates E = U·√Λ from the top-``rank`` eigenpairs of a PSD Gram matrix.

    Negative eigenvalues among the selected ones are clamped to zero (the
    input may be non-Euclidean) with a :class:`NegativeEigenvalueWarning`.
    """
    G = as_dense(G, "G")
    n = G.shape[0]
    if G.shape[0] != G.shape[1]:
        raise ValueError("G must be square")
    if rank > n:
        raise ValueError(f"rank {rank} exceeds matrix size {n}")
    scale = float(np.max(np.abs(G))) if n else 0.0
    if scale > 0 and float(np.max(np.abs(G - G.T))) > 1e-8 * scale:
        raise ValueError("G must be symmetric")
    vals, vecs = np.linalg.eigh((G + G.T) / 2.0)
    order = np.argsort(vals)[::-1][:rank]
    top = vals[order]
    if np.any(top < 0):
        warnings.warn(
            f"classical_mds: clamped {int(np.sum(top < 0))} negative eigenvalue(s)",
            NegativeEigenvalueWarning,
            stacklevel=2,
        )
        top = np.clip(top, 0.0, None)
    return vecs[:, order] * np.sqrt(top)[None, :]
