"""Coupled rank-F decomposition of the two centered Gram slabs.

The model fits X₁ ≈ U·diag(C(1,:))·U′ᵀ and X₂ ≈ U·diag(C(2,:))·U′ᵀ jointly,
where X_k = J·Y_k·Y_kᵀ·J are the implicit connectivity and attribute Gram
slabs.  Three pieces:

* :func:`gage_evd_init` — algebraic initialization: orthogonal iterations on
  X₁² + X₂² for a basis V, then a joint-diagonalization step on the
  projected F×F slabs S₂·S₁⁻¹ whose eigenvectors lift back through V.
* :func:`als_iterate` — alternating least squares whose right-hand sides are
  assembled in O(s·F) flops (s = total nonzeros) by
  :func:`krp_slab_product_mode12` / :func:`krp_slab_product_mode3`, without
  ever materializing a Khatri–Rao product or a dense slab.
* :func:`assemble_embeddings` — the final N×F embedding
  E = U·diag(√(λ·C(1,:) + (1−λ)·C(2,:))), clamping negative combined
  weights to zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .centering import CenteredGramOperator, gram_apply, squared_apply, project_small
from .sparse import SparseMatrix, as_dense, dense_gram, hadamard, solve_spd
from .spectral import OrthIterConfig, eig_general_small, orth_iter

INIT_VARIANTS = ("evd", "paper-box", "paper-text", "random")

_GRAM_DIM_LIMIT = 4096
_DENSE_RESIDUAL_LIMIT = 2048
_HUTCHINSON_PROBES = 64


class InitDegenerateError(RuntimeError):
    """Projected slab S₁ singular beyond ridge repair during initialization.

    Carries the orthonormal basis computed so far in ``basis``; callers may
    fall back to it as the initial factor.
    """

    def __init__(self, message: str, basis: np.ndarray):
        super().__init__(message)
        self.basis = basis


class DivergenceError(RuntimeError):
    """ALS produced non-finite values or unbounded factor norms."""


@dataclass(frozen=True)
class SolverConfig:
    """Rank, stopping rule, seed, and mixing weight for one embedding run."""

    rank: int
    tol: float = 1e-6
    max_iter: int = 50
    seed: int = 0
    lam: float = 0.8

    def __post_init__(self):
        if self.rank < 1:
            raise ValueError("rank must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError("lam must lie in [0, 1]")


@dataclass(frozen=True)
class CpdFactors:
    """Factor triple (U, U′, C) with C of shape 2×F.

    After normalization the columns of U and U′ have unit norm, all scale is
    folded into C, and ⟨U(:,f), U′(:,f)⟩ ≥ 0 for every column.
    """

    U: np.ndarray
    U_prime: np.ndarray
    C: np.ndarray


@dataclass(frozen=True)
class AlsInfo:
    n_sweeps: int
    converged: bool
    final_delta: float


@dataclass(frozen=True)
class EmbeddingMatrix:
    """N×F node embeddings with the mixing weight they were assembled at."""

    E: np.ndarray
    lam: float
    clamped_dims: tuple[int, ...] = ()


class ReconstructionError(NamedTuple):
    err1: float
    err2: float
    estimated: bool


def _check_pair(op1: CenteredGramOperator, op2: CenteredGramOperator) -> int:
    if op1.n != op2.n:
        raise ValueError(f"operators disagree on n: {op1.n} vs {op2.n}")
    return op1.n


def gage_evd_init(
    op1: CenteredGramOperator,
    op2: CenteredGramOperator,
    rank: int,
    *,
    seed: int = 0,
    tol: float = 1e-8,
    max_iter: int = 300,
    variant: str = "evd",
) -> np.ndarray:
    """Algebraic initial factor U₀ for the coupled decomposition.

    Steps: (1) orthogonal iterations on b ↦ X₁²b + X₂²b give an orthonormal
    V spanning the dominant rank-F subspace; (2) the slabs are projected to
    S_k = Vᵀ·X_k·V; (3) the eigenvector matrix Ũ of S₂·S₁⁻¹ (formed by a
    solve, never an explicit inverse) diagonalizes both projected slabs;
    (4) the factor is lifted back to N dimensions.

    ``variant`` selects the lifting formula: ``"evd"`` (default) uses
    U₀ = V·Ũ, the direct simultaneous-diagonalization recovery;
    ``"paper-box"`` uses the inverse-transpose form U₀ = V·Ũ⁻ᵀ and
    ``"paper-text"`` lifts (Ũ⁻¹·S₁)ᵀ through V — both kept only for
    comparison, as they recover a non-orthogonal factor incorrectly.

    Raises
    ------
    InitDegenerateError
        If S₁ is singular beyond ridge repair or the lift produces
        non-finite values; the exception carries V for fallback use.
    """
    n = _check_pair(op1, op2)
    if variant not in ("evd", "paper-box", "paper-text"):
        raise ValueError(f"unknown init variant {variant!r}")
    if not 1 <= rank <= n - 1:
        raise ValueError(f"rank must be in [1, n-1] = [1, {n - 1}] (centering kills one dim)")

    cfg = OrthIterConfig(rank=rank, tol=tol, max_iter=max_iter, seed=seed)
    V, _ = orth_iter(
        lambda B: squared_apply(op1, B) + squared_apply(op2, B), n, cfg
    )
    S1 = project_small(op1, V)
    S2 = project_small(op2, V)
    try:
        # X·S₁ = S₂  ⇔  S₁·Xᵀ = S₂ᵀ  (both symmetric)
        M = solve_spd(S1, S2.T).T
        _, Ut, _complex = eig_general_small(M)
        if variant == "evd":
            U0 = V @ Ut
        elif variant == "paper-box":
            U0 = V @ np.linalg.inv(Ut).T
        else:
            U0 = V @ (np.linalg.solve(Ut, S1)).T
    except np.linalg.LinAlgError as exc:
        raise InitDegenerateError(f"init degenerate: {exc}", basis=V) from exc
    if not np.all(np.isfinite(U0)):
        raise InitDegenerateError("init degenerate: non-finite factor", basis=V)
    return U0


def krp_slab_product_mode12(
    op1: CenteredGramOperator,
    op2: CenteredGramOperator,
    A,
    C,
) -> np.ndarray:
    """(C⊙A)ᵀ·X⁽¹⁾ in O(s·F) flops, s = nnz(Y₁)+nnz(Y₂).

    Exploits the stacked-slab structure of the mode-1 unfolding:
    (C⊙A)ᵀ·[X₁; X₂] = Σ_k diag(C(k,:))·(X_k·A)ᵀ, with each X_k·A applied
    implicitly.  Because the slabs are symmetric the same kernel serves the
    mode-2 update.  Neither C⊙A nor any X_k is materialized.

    Returns an F×N array.
    """
    n = _check_pair(op1, op2)
    A = as_dense(A, "A")
    C = as_dense(C, "C")
    if A.shape[0] != n:
        raise ValueError(f"A must have {n} rows, got {A.shape[0]}")
    if C.shape != (2, A.shape[1]):
        raise ValueError(f"C must be 2x{A.shape[1]}, got {C.shape}")
    out = C[0][:, None] * gram_apply(op1, A).T
    out += C[1][:, None] * gram_apply(op2, A).T
    return out


def krp_slab_product_mode3(
    op1: CenteredGramOperator,
    op2: CenteredGramOperator,
    U,
    Up,
) -> np.ndarray:
    """(U′⊙U)ᵀ·X⁽³⁾ in O(max{N·F, s·F}) flops, without storing U′⊙U.

    Entry (f, k) is U(:,f)ᵀ·X_k·U′(:,f); each column is a fused
    multiply-reduce against one implicit slab application.

    Returns an F×2 array.
    """
    n = _check_pair(op1, op2)
    U = as_dense(U, "U")
    Up = as_dense(Up, "Up")
    if U.shape != Up.shape or U.shape[0] != n:
        raise ValueError(f"U and Up must both be {n}xF, got {U.shape} and {Up.shape}")
    col1 = np.sum(U * gram_apply(op1, Up), axis=0)
    col2 = np.sum(U * gram_apply(op2, Up), axis=0)
    return np.stack([col1, col2], axis=1)


def _normalized(U, Up, C) -> CpdFactors:
    su = np.linalg.norm(U, axis=0)
    sp_ = np.linalg.norm(Up, axis=0)
    su_safe = np.where(su > 0, su, 1.0)
    sp_safe = np.where(sp_ > 0, sp_, 1.0)
    Un = U / su_safe
    Upn = Up / sp_safe
    Cn = C * (su * sp_)[None, :]
    flip = np.where(np.sum(Un * Upn, axis=0) < 0.0, -1.0, 1.0)
    Upn = Upn * flip
    Cn = Cn * flip
    return CpdFactors(Un, Upn, Cn)


def als_iterate(
    op1: CenteredGramOperator,
    op2: CenteredGramOperator,
    U0,
    config: SolverConfig,
    callback: Callable[[str, CpdFactors], None] | None = None,
) -> tuple[CpdFactors, AlsInfo]:
    """Alternating least squares for the coupled slab decomposition.

    Starting from U₀, first solves for C (mode-3), sets U′ = U₀, then sweeps
    U → U′ → C until the largest relative factor change drops below
    ``config.tol`` or ``config.max_iter`` sweeps elapse.  Each update solves
    the Hadamard-of-Grams normal equations, e.g. for U:

        ((CᵀC) ∗ (U′ᵀU′))·Uᵀ = (C⊙U′)ᵀ·X⁽¹⁾,

    with the right-hand side assembled by the O(s·F) kernels above.  The
    returned factors are normalized (unit columns, scales folded into C,
    per-column sign fixed).

    Parameters
    ----------
    callback : callable, optional
        Invoked as ``callback(stage, factors)`` after every factor update,
        ``stage`` in {"c", "u", "u_prime"}.  The arrays are live views;
        copy them if you keep them.

    Raises
    ------
    DivergenceError
        On NaN/Inf in any update or runaway factor norms.
    """
    n = _check_pair(op1, op2)
    U = as_dense(U0, "U0").copy()
    if U.shape[0] != n:
        raise ValueError(f"U0 must have {n} rows, got {U.shape[0]}")
    if U.shape[1] != config.rank:
        raise ValueError(f"U0 has rank {U.shape[1]}, config says {config.rank}")
    if not np.all(np.isfinite(U)):
        raise ValueError("U0 must be finite")
    Up = U.copy()

    C = solve_spd(
        hadamard(dense_gram(Up), dense_gram(U)),
        krp_slab_product_mode3(op1, op2, U, Up),
    ).T
    _post_update_check(U, Up, C, sweep=0)
    if callback is not None:
        callback("c", CpdFactors(U, Up, C))

    scale0 = max(float(np.linalg.norm(U)), 1.0)
    delta = np.inf
    converged = False
    sweeps = 0
    for sweep in range(1, config.max_iter + 1):
        U_old, Up_old, C_old = U, Up, C

        U = solve_spd(
            hadamard(dense_gram(C), dense_gram(Up)),
            krp_slab_product_mode12(op1, op2, Up, C),
        ).T
        _post_update_check(U, Up, C, sweep)
        if callback is not None:
            callback("u", CpdFactors(U, Up, C))

        Up = solve_spd(
            hadamard(dense_gram(C), dense_gram(U)),
            krp_slab_product_mode12(op1, op2, U, C),
        ).T
        _post_update_check(U, Up, C, sweep)
        if callback is not None:
            callback("u_prime", CpdFactors(U, Up, C))

        C = solve_spd(
            hadamard(dense_gram(Up), dense_gram(U)),
            krp_slab_product_mode3(op1, op2, U, Up),
        ).T
        _post_update_check(U, Up, C, sweep)
        if callback is not None:
            callback("c", CpdFactors(U, Up, C))

        if max(np.linalg.norm(U), np.linalg.norm(Up)) > 1e12 * scale0:
            raise DivergenceError(f"factor norms diverged at sweep {sweep}")

        delta = max(
            _rel_change(U, U_old), _rel_change(Up, Up_old), _rel_change(C, C_old)
        )
        sweeps = sweep
        if delta < config.tol:
            converged = True
            break

    return _normalized(U, Up, C), AlsInfo(sweeps, converged, delta)


def _rel_change(A, A_old) -> float:
    denom = max(float(np.linalg.norm(A)), np.finfo(np.float64).tiny)
    return float(np.linalg.norm(A - A_old)) / denom


def _post_update_check(U, Up, C, sweep: int) -> None:
    for name, arr in (("U", U), ("U_prime", Up), ("C", C)):
        if not np.all(np.isfinite(arr)):
            raise DivergenceError(f"non-finite {name} at sweep {sweep}")


def assemble_embeddings(factors: CpdFactors, lam: float) -> EmbeddingMatrix:
    """E = U·diag(√w) with w = max(0, λ·C(1,:) + (1−λ)·C(2,:)).

    λ = 1 weights the embedding entirely toward connectivity distances,
    λ = 0 entirely toward attribute distances.  Columns whose combined
    weight came out negative are clamped to zero and recorded in
    ``clamped_dims``.
    """
    if not 0.0 <= lam <= 1.0:
        raise ValueError("lam must lie in [0, 1]")
    w = lam * factors.C[0] + (1.0 - lam) * factors.C[1]
    clamped = tuple(int(i) for i in np.flatnonzero(w < 0.0))
    E = factors.U * np.sqrt(np.clip(w, 0.0, None))[None, :]
    return EmbeddingMatrix(E=E, lam=float(lam), clamped_dims=clamped)


def reconstruction_error(
    op1: CenteredGramOperator,
    op2: CenteredGramOperator,
    factors: CpdFactors,
    *,
    seed: int = 0,
) -> ReconstructionError:
    """Per-slab relative Frobenius error of the fitted model.

    ‖X_k − U·diag(C(k,:))·U′ᵀ‖_F / ‖X_k‖_F.  Up to N = 2048 the residual is
    formed densely (exact to machine precision); beyond that the norm is
    expanded into cross and model terms from implicit applications and F×F
    Grams, which carries a √machine-epsilon relative floor near perfect
    fits.  ‖X_k‖_F² is computed exactly through the smaller-side Gram
    Z_k·Z_kᵀ (Z_k = Y_kᵀ·J) when min(N, M_k) ≤ 4096 and otherwise estimated
    with 64 seeded Hutchinson probes (``estimated=True``).
    """
    n = _check_pair(op1, op2)
    U, Up, C = factors.U, factors.U_prime, factors.C

    errs = []
    estimated = False
    if n <= _DENSE_RESIDUAL_LIMIT:
        for k, op in ((0, op1), (1, op2)):
            X = _dense_slab(op)
            x_norm = float(np.linalg.norm(X))
            R = X - (U * C[k][None, :]) @ Up.T
            r_norm = float(np.linalg.norm(R))
            errs.append(r_norm / x_norm if x_norm > 0.0
                        else (0.0 if r_norm == 0.0 else np.inf))
        return ReconstructionError(errs[0], errs[1], False)

    cross_gram = hadamard(dense_gram(U), dense_gram(Up))
    for k, op in ((0, op1), (1, op2)):
        d = C[k]
        G = gram_apply(op, U)
        cross = float(np.sum(d * np.sum(Up * G, axis=0)))
        model_sq = float(d @ cross_gram @ d)
        x_sq, est = _slab_norm_sq(op, seed=seed + k)
        estimated = estimated or est
        if x_sq <= 0.0:
            errs.append(0.0 if model_sq <= 1e-300 else np.inf)
            continue
        num_sq = max(0.0, x_sq - 2.0 * cross + model_sq)
        errs.append(float(np.sqrt(num_sq / x_sq)))
    return ReconstructionError(errs[0], errs[1], estimated)


def _dense_slab(op: CenteredGramOperator) -> np.ndarray:
    """Dense X = J·Y·Yᵀ·J; diagnostic use only, never called by init or ALS."""
    y = op.y
    G = (y._csr @ y._csr.T).toarray()
    G = G - G.mean(axis=0, keepdims=True)
    G = G - G.mean(axis=1, keepdims=True)
    return G


def _slab_norm_sq(op: CenteredGramOperator, seed: int) -> tuple[float, bool]:
    """‖X‖_F² for X = J·Y·Yᵀ·J, exact when a ≤4096-dim Gram is available."""
    y = op.y
    n, m = y.n_rows, y.n_cols
    if min(n, m) <= _GRAM_DIM_LIMIT:
        if m <= n:
            G = (y._csr.T @ y._csr).toarray()
            s = y.column_sums()
            G -= np.outer(s, s) / n
        else:
            G = _dense_slab(op)
        return float(np.sum(G * G)), False
    rng = np.random.default_rng(seed)
    Z = rng.choice([-1.0, 1.0], size=(n, _HUTCHINSON_PROBES))
    W = gram_apply(op, Z)
    return float(np.sum(W * W)) / _HUTCHINSON_PROBES, True


def embed(
    y1: SparseMatrix,
    y2: SparseMatrix,
    config: SolverConfig,
    init: str = "evd",
    callback: Callable[[str, CpdFactors], None] | None = None,
) -> tuple[EmbeddingMatrix, CpdFactors, AlsInfo]:
    """Full pipeline: operators → initialization → ALS → embedding assembly.

    ``init`` is one of ``"evd"`` (algebraic initialization, falling back to
    the orthogonal basis if the projected slab is degenerate),
    ``"paper-box"`` / ``"paper-text"`` (alternative lifts, see
    :func:`gage_evd_init`), or ``"random"`` (seeded Gaussian factor).
    """
    if init not in INIT_VARIANTS:
        raise ValueError(f"init must be one of {INIT_VARIANTS}")
    if y1.n_rows != y2.n_rows:
        raise ValueError(
            f"slabs disagree on node count: {y1.n_rows} vs {y2.n_rows}"
        )
    op1 = CenteredGramOperator(y1)
    op2 = CenteredGramOperator(y2)
    if init == "random":
        rng = np.random.default_rng(config.seed)
        U0 = rng.standard_normal((op1.n, config.rank))
    else:
        try:
            U0 = gage_evd_init(
                op1, op2, config.rank, seed=config.seed, variant=init
            )
        except InitDegenerateError as exc:
            U0 = exc.basis
    factors, info = als_iterate(op1, op2, U0, config, callback=callback)
    return assemble_embeddings(factors, config.lam), factors, info
