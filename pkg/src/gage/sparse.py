"""Sparse CSR container and the small dense kernels everything else builds on.

Dense matrices throughout the library are plain float64, C-order
``numpy.ndarray`` objects.  The only custom container is
:class:`SparseMatrix`, an immutable canonical-CSR wrapper used for the
adjacency and attribute matrices.
"""

from __future__ import annotations

import warnings

import numpy as np
import scipy.linalg
import scipy.sparse as sp


class RidgeWarning(RuntimeWarning):
    """A nearly singular symmetric system was solved with a ridge term."""


def as_dense(B, name: str = "array") -> np.ndarray:
    """Coerce ``B`` to a float64, C-contiguous 2-D array."""
    B = np.ascontiguousarray(B, dtype=np.float64)
    if B.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {B.shape}")
    return B


class SparseMatrix:
    """Immutable CSR matrix over float64 values.

    Canonical form is enforced at construction: within each row the column
    indices are strictly increasing, duplicate (row, col) entries have been
    summed, and no explicit zeros are stored.  The underlying arrays are
    frozen (read-only) afterwards, so instances are safe to share between
    threads.

    Attributes
    ----------
    n_rows, n_cols : int
    row_ptr : (n_rows+1,) int64 array, nondecreasing, ``row_ptr[-1] == nnz``
    col_idx : (nnz,) int64 array
    values : (nnz,) float64 array
    """

    __slots__ = ("n_rows", "n_cols", "row_ptr", "col_idx", "values", "_csr")

    def __init__(self, n_rows, n_cols, row_ptr, col_idx, values):
        if n_rows < 0 or n_cols < 0:
            raise ValueError("matrix dimensions must be nonnegative")
        csr = sp.csr_array(
            (np.asarray(values, dtype=np.float64),
             np.asarray(col_idx, dtype=np.int64),
             np.asarray(row_ptr, dtype=np.int64)),
            shape=(n_rows, n_cols),
        )
        self._init_from_csr(csr)

    def _init_from_csr(self, csr: sp.csr_array) -> None:
        csr.sum_duplicates()
        csr.eliminate_zeros()
        csr.sort_indices()
        self._csr = csr
        self.n_rows, self.n_cols = csr.shape
        self.row_ptr = np.ascontiguousarray(csr.indptr, dtype=np.int64)
        self.col_idx = np.ascontiguousarray(csr.indices, dtype=np.int64)
        self.values = np.ascontiguousarray(csr.data, dtype=np.float64)
        if not np.all(np.isfinite(self.values)):
            raise ValueError("sparse matrix values must be finite")
        for arr in (self.row_ptr, self.col_idx, self.values):
            arr.flags.writeable = False

    @classmethod
    def _wrap(cls, csr: sp.csr_array) -> "SparseMatrix":
        out = object.__new__(cls)
        out._init_from_csr(csr.astype(np.float64))
        return out

    @classmethod
    def from_coo(cls, n_rows, n_cols, rows, cols, values) -> "SparseMatrix":
        """Build from coordinate triplets; duplicate entries are summed."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        values = np.asarray(values, dtype=np.float64)
        if rows.size and (rows.min() < 0 or rows.max() >= n_rows):
            raise ValueError("row index out of range")
        if cols.size and (cols.min() < 0 or cols.max() >= n_cols):
            raise ValueError("column index out of range")
        coo = sp.coo_array((values, (rows, cols)), shape=(n_rows, n_cols))
        return cls._wrap(coo.tocsr())

    @classmethod
    def from_dense(cls, A) -> "SparseMatrix":
        A = as_dense(A, "A")
        return cls._wrap(sp.csr_array(A))

    @classmethod
    def identity(cls, n: int) -> "SparseMatrix":
        return cls._wrap(sp.eye_array(n, format="csr"))

    @property
    def nnz(self) -> int:
        return int(self.row_ptr[-1])

    @property
    def is_symmetric(self) -> bool:
        if self.n_rows != self.n_cols:
            return False
        d = self._csr - self._csr.T
        return d.nnz == 0 or float(np.max(np.abs(d.data))) == 0.0

    def to_dense(self) -> np.ndarray:
        return self._csr.toarray()

    def column_sums(self) -> np.ndarray:
        """1ᵀ·S as a 1-D array of length ``n_cols``."""
        return np.asarray(self._csr.sum(axis=0)).ravel()

    def __eq__(self, other) -> bool:
        if not isinstance(other, SparseMatrix):
            return NotImplemented
        return (
            self.n_rows == other.n_rows
            and self.n_cols == other.n_cols
            and np.array_equal(self.row_ptr, other.row_ptr)
            and np.array_equal(self.col_idx, other.col_idx)
            and np.array_equal(self.values, other.values)
        )

    def __hash__(self):
        return hash((self.n_rows, self.n_cols, self.nnz))

    def __repr__(self):
        return f"SparseMatrix({self.n_rows}x{self.n_cols}, nnz={self.nnz})"


def spmm(S: SparseMatrix, B) -> np.ndarray:
    """S·B for CSR ``S`` and dense ``B``."""
    B = as_dense(B, "B")
    if S.n_cols != B.shape[0]:
        raise ValueError(f"spmm: S is {S.n_rows}x{S.n_cols}, B has {B.shape[0]} rows")
    return np.ascontiguousarray(S._csr @ B)


def spmm_transposed(S: SparseMatrix, B) -> np.ndarray:
    """Sᵀ·B without materializing the transpose (CSC view of the CSR data)."""
    B = as_dense(B, "B")
    if S.n_rows != B.shape[0]:
        raise ValueError(f"spmm_transposed: S has {S.n_rows} rows, B has {B.shape[0]}")
    return np.ascontiguousarray(S._csr.T @ B)


def dense_gram(A) -> np.ndarray:
    """AᵀA, symmetrized so the result is bitwise symmetric."""
    A = as_dense(A, "A")
    G = A.T @ A
    return (G + G.T) / 2.0


def hadamard(A, B) -> np.ndarray:
    """Elementwise product of two equal-shape dense matrices."""
    A = as_dense(A, "A")
    B = as_dense(B, "B")
    if A.shape != B.shape:
        raise ValueError(f"hadamard: shape mismatch {A.shape} vs {B.shape}")
    return A * B


def solve_spd(G, RHS) -> np.ndarray:
    """Solve G·X = RHS for symmetric (positive semidefinite) G.

    Uses a Cholesky factorization.  If G is numerically singular the system
    (G + εI)·X = RHS is solved instead, with ε = 1e-9·trace(G)/F, escalating
    by 1e3 a couple of times if needed; a :class:`RidgeWarning` is emitted
    whenever the ridge fallback engages.
    """
    G = as_dense(G, "G")
    RHS = as_dense(RHS, "RHS")
    f = G.shape[0]
    if G.shape[0] != G.shape[1]:
        raise ValueError("G must be square")
    if RHS.shape[0] != f:
        raise ValueError("RHS row count must match G")
    if not np.all(np.isfinite(G)) or not np.all(np.isfinite(RHS)):
        raise ValueError("solve_spd: non-finite input")
    scale = float(np.max(np.abs(G))) if f else 0.0
    if scale > 0 and float(np.max(np.abs(G - G.T))) > 1e-8 * scale:
        raise ValueError("solve_spd: G is not symmetric")
    G = (G + G.T) / 2.0

    try:
        c = scipy.linalg.cho_factor(G, lower=True, check_finite=False)
        return scipy.linalg.cho_solve(c, RHS, check_finite=False)
    except np.linalg.LinAlgError:
        pass

    eps = 1e-9 * float(np.trace(G)) / max(f, 1)
    if not eps > 0.0:
        eps = 1e-12 * max(scale, 1.0)
    for _ in range(3):
        try:
            c = scipy.linalg.cho_factor(
                G + eps * np.eye(f), lower=True, check_finite=False
            )
        except np.linalg.LinAlgError:
            eps *= 1e3
            continue
        warnings.warn(
            f"solve_spd: nearly singular system, applied ridge eps={eps:.3e}",
            RidgeWarning,
            stacklevel=2,
        )
        return scipy.linalg.cho_solve(c, RHS, check_finite=False)
    raise np.linalg.LinAlgError("solve_spd: matrix singular beyond ridge repair")
