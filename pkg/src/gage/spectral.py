"""Eigen-machinery: thin QR, orthogonal iterations, and small eigensolvers.

The orthogonal-iterations routine is matrix-free: it only sees a callable
that applies a symmetric PSD operator to an N×F block, so the dominant
invariant subspace of the squared centered-Gram sum can be found at
O(N·F²) per iteration plus one operator application.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .sparse import as_dense


class RankDeficiencyWarning(RuntimeWarning):
    """Rank-deficient QR input; the dead columns were redrawn at random."""


@dataclass(frozen=True)
class OrthIterConfig:
    rank: int
    tol: float = 1e-8
    max_iter: int = 300
    seed: int = 0

    def __post_init__(self):
        if self.rank < 1:
            raise ValueError("rank must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@dataclass(frozen=True)
class OrthIterInfo:
    converged: bool
    n_iter: int
    final_delta: float
    ritz_values: np.ndarray


def thin_qr(W, rng: np.random.Generator | None = None):
    """Reduced QR of a tall matrix with a sign-fixed, nonnegative R diagonal.

    Householder-based (LAPACK).  If W is numerically rank deficient, the
    corresponding R diagonal entries are reported as exact zeros and the
    matching Q columns are redrawn from ``rng`` and re-orthogonalized, so Q
    is always a full orthonormal basis.

    Returns
    -------
    Q : (n, f) array with orthonormal columns
    R : (f, f) upper-triangular array, ``Q @ R == W`` up to roundoff
    """
    W = as_dense(W, "W")
    n, f = W.shape
    if n < f:
        raise ValueError(f"thin_qr: need n >= f, got {W.shape}")
    Q, R = np.linalg.qr(W)
    signs = np.where(np.diag(R) < 0.0, -1.0, 1.0)
    Q = Q * signs[None, :]
    R = R * signs[:, None]

    diag = np.abs(np.diag(R))
    tol = max(n, f) * np.finfo(np.float64).eps * (diag.max() if f else 0.0)
    dead = np.flatnonzero(diag <= tol)
    if dead.size:
        if rng is None:
            rng = np.random.default_rng(0)
        alive = np.setdiff1d(np.arange(f), dead)
        for j in dead:
            q = rng.standard_normal(n)
            for _ in range(2):  # twice-is-enough re-orthogonalization
                q -= Q[:, alive] @ (Q[:, alive].T @ q)
                for jj in dead:
                    if jj < j:
                        q -= Q[:, jj] * (Q[:, jj] @ q)
            q /= np.linalg.norm(q)
            Q[:, j] = q
        R = np.triu(Q.T @ W)
        R[dead, :] = 0.0
        warnings.warn(
            f"thin_qr: rank-deficient input, redrew columns {dead.tolist()}",
            RankDeficiencyWarning,
            stacklevel=2,
        )
    return Q, R


def orth_iter(apply, n: int, cfg: OrthIterConfig):
    """Dominant invariant subspace of a symmetric PSD operator.

    Block power iteration with QR re-orthonormalization.  Convergence is
    measured on the orthogonal projector Q·Qᵀ (the basis itself is only
    defined up to rotation): ‖Q_k·Q_kᵀ − Q_{k−1}·Q_{k−1}ᵀ‖_F is evaluated in
    the cancellation-free form √2·‖Q_k − Q_{k−1}(Q_{k−1}ᵀQ_k)‖_F, so no N×N
    matrix is ever formed and the measure stays meaningful down to machine
    precision.  The returned basis is Rayleigh–Ritz rotated, so its columns
    approximate eigenvectors in descending eigenvalue order.

    Parameters
    ----------
    apply : callable
        Maps an (n, rank) block B to the operator image, same shape.
    n : int
        Operator dimension.
    cfg : OrthIterConfig

    Returns
    -------
    Q : (n, rank) orthonormal array
    info : OrthIterInfo
    """
    rng = np.random.default_rng(cfg.seed)
    f = cfg.rank
    if f > n:
        raise ValueError(f"rank {f} exceeds dimension {n}")
    Q, _ = thin_qr(rng.standard_normal((n, f)), rng=rng)
    delta = np.inf
    converged = False
    it = 0
    for it in range(1, cfg.max_iter + 1):
        W = apply(Q)
        W = as_dense(W, "apply(Q)")
        if W.shape != (n, f):
            raise ValueError(f"operator returned shape {W.shape}, expected {(n, f)}")
        Qn, _ = thin_qr(W, rng=rng)
        resid = Qn - Q @ (Q.T @ Qn)
        delta = float(np.sqrt(2.0) * np.linalg.norm(resid))
        Q = Qn
        if delta < cfg.tol:
            converged = True
            break
    B = Q.T @ apply(Q)
    vals, vecs = sym_evd_small((B + B.T) / 2.0)
    Q = Q @ vecs
    return Q, OrthIterInfo(converged, it, delta, vals)


def sym_evd_small(A):
    """Eigendecomposition of a small symmetric matrix, eigenvalues descending."""
    A = as_dense(A, "A")
    if A.shape[0] != A.shape[1]:
        raise ValueError("A must be square")
    scale = float(np.max(np.abs(A))) if A.size else 0.0
    if scale > 0 and float(np.max(np.abs(A - A.T))) > 1e-8 * scale:
        raise ValueError("sym_evd_small: input not symmetric")
    vals, vecs = np.linalg.eigh((A + A.T) / 2.0)
    order = np.argsort(vals)[::-1]
    return vals[order], vecs[:, order]


def eig_general_small(M):
    """Real eigendecomposition of a small (generically real-eigenvalue) matrix.

    Complex conjugate eigenpairs can occur off the intended model class; in
    that case the pair's two eigenvector columns are replaced by the real
    and imaginary parts of one member (the real-Schur treatment), the
    eigenvalues by their shared real part, and ``complex_flag`` is set.

    Returns
    -------
    vals : (f,) float64 array
    vecs : (f, f) float64 array
    complex_flag : bool
    """
    M = as_dense(M, "M")
    if M.shape[0] != M.shape[1]:
        raise ValueError("M must be square")
    if not np.all(np.isfinite(M)):
        raise ValueError("eig_general_small: non-finite input")
    vals, vecs = np.linalg.eig(M)
    if not np.iscomplexobj(vals):
        return vals.astype(np.float64), vecs.astype(np.float64), False

    f = M.shape[0]
    out_vals = np.empty(f)
    out_vecs = np.empty((f, f))
    complex_flag = False
    handled = np.zeros(f, dtype=bool)
    for j in range(f):
        if handled[j]:
            continue
        lam = vals[j]
        if lam.imag == 0.0:
            out_vals[j] = lam.real
            out_vecs[:, j] = vecs[:, j].real
            handled[j] = True
            continue
        complex_flag = True
        partner = None
        for k in range(j + 1, f):
            if not handled[k] and np.isclose(vals[k], np.conj(lam)):
                partner = k
                break
        if partner is None:  # should not happen for real input
            out_vals[j] = lam.real
            out_vecs[:, j] = vecs[:, j].real
            handled[j] = True
            continue
        v = vecs[:, j]
        out_vals[j] = lam.real
        out_vals[partner] = lam.real
        out_vecs[:, j] = v.real
        out_vecs[:, partner] = v.imag
        handled[j] = True
        handled[partner] = True
    return out_vals, out_vecs, complex_flag
