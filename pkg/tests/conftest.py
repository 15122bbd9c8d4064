import os
import tracemalloc
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest

from gage import SparseMatrix

DATASET_FILES = ("adjacency.mtx", "attributes.mtx", "labels.tsv")


def data_root() -> Path:
    return Path(os.environ.get("GAGE_DATA_DIR",
                               Path(__file__).resolve().parents[1] / "data"))


def require_dataset(name: str) -> Path:
    """Return the dataset directory or skip the test with fetch instructions."""
    d = data_root() / name
    missing = [f for f in DATASET_FILES if not (d / f).exists()]
    if missing:
        pytest.skip(
            f"dataset '{name}' not available (missing {missing} under {d}); "
            "see scripts/fetch_datasets.md for download and conversion steps"
        )
    return d


def exact_model(n: int, rank: int, seed: int, lo: float = 0.5, hi: float = 2.0):
    """Exact low-rank instance: centered generic factor, positive weights.

    Returns (U, w1, w2, y1, y2) where the slabs J·y_k·y_kᵀ·J equal
    U·diag(w_k)·Uᵀ exactly because y_k = U·√diag(w_k) and U is centered.
    """
    rng = np.random.default_rng(seed)
    U = rng.standard_normal((n, rank))
    U -= U.mean(axis=0)
    w1 = rng.uniform(lo, hi, rank)
    w2 = rng.uniform(lo, hi, rank)
    y1 = SparseMatrix.from_dense(U * np.sqrt(w1)[None, :])
    y2 = SparseMatrix.from_dense(U * np.sqrt(w2)[None, :])
    return U, w1, w2, y1, y2


def random_sparse(n_rows: int, n_cols: int, density: float, seed: int) -> SparseMatrix:
    rng = np.random.default_rng(seed)
    nnz = max(1, int(density * n_rows * n_cols))
    rows = rng.integers(0, n_rows, size=nnz)
    cols = rng.integers(0, n_cols, size=nnz)
    vals = rng.standard_normal(nnz)
    return SparseMatrix.from_coo(n_rows, n_cols, rows, cols, vals)


def planted_graph(n: int = 30, n_classes: int = 3, seed: int = 0,
                  p_in: float = 0.5, p_out: float = 0.05, d: int = 8):
    """Small synthetic attributed graph with community structure.

    Returns (adjacency, attributes, labels) — adjacency symmetric binary
    without self-loops, attributes = noisy class indicators.
    """
    rng = np.random.default_rng(seed)
    labels = np.repeat(np.arange(n_classes), n // n_classes + 1)[:n]
    rows, cols = [], []
    for i in range(n):
        for j in range(i + 1, n):
            p = p_in if labels[i] == labels[j] else p_out
            if rng.random() < p:
                rows += [i, j]
                cols += [j, i]
    adj = SparseMatrix.from_coo(n, n, rows, cols, np.ones(len(rows)))
    attrs = 0.3 * rng.standard_normal((n, d))
    for i in range(n):
        attrs[i, labels[i]] += 1.0
        attrs[i, n_classes + labels[i] % (d - n_classes)] += 0.5
    return adj, SparseMatrix.from_dense(attrs), labels


@contextmanager
def traced_peak_memory():
    """Context manager yielding a dict with the peak traced allocation delta."""
    tracemalloc.start()
    tracemalloc.reset_peak()
    base, _ = tracemalloc.get_traced_memory()
    out = {}
    try:
        yield out
    finally:
        _, peak = tracemalloc.get_traced_memory()
        tracemalloc.stop()
        out["peak_bytes"] = peak - base


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
