"""Dataset ingestion and embedding persistence.

Formats: coordinate Matrix Market for sparse matrices, whitespace/comma
edge lists, ``node_id<TAB>class`` label files, and embeddings as either TSV
(17 significant digits) or a small binary container (magic ``GAGE\\0``,
version, dimensions, λ, row-major float64 payload, CRC32 of the payload).
"""

from __future__ import annotations

import json
import struct
import warnings
import zlib
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .solver import EmbeddingMatrix
from .sparse import SparseMatrix

_MAGIC = b"GAGE\x00"
_VERSION = 1


class DataError(ValueError):
    """Malformed or inconsistent input data."""


class DataFormatError(DataError):
    def __init__(self, path, lineno, message):
        super().__init__(f"{path}:{lineno}: {message}")
        self.path = str(path)
        self.lineno = lineno


@dataclass
class AttributedGraph:
    """Dataset bundle: binarized adjacency, attribute matrix, optional labels.

    ``labels[i] == -1`` marks an unlabeled node; ``node_ids[i]`` is the
    external identifier of dense index i.
    """

    adjacency: SparseMatrix
    attributes: SparseMatrix
    labels: np.ndarray | None = None
    node_ids: list = field(default_factory=list)
    dropped_self_loops: int = 0

    @property
    def n(self) -> int:
        return self.adjacency.n_rows

    @property
    def n_edges(self) -> int:
        """Edge count; mirror pairs of a symmetric adjacency count once."""
        nnz = self.adjacency.nnz
        return nnz // 2 if self.adjacency.is_symmetric else nnz

    @property
    def n_classes(self) -> int:
        if self.labels is None:
            return 0
        labeled = self.labels[self.labels >= 0]
        return int(np.unique(labeled).size)


def build_graph(
    adjacency: SparseMatrix,
    attributes: SparseMatrix,
    labels_by_id: dict | None = None,
    node_ids: list | None = None,
) -> AttributedGraph:
    """Canonicalize loaded matrices into an :class:`AttributedGraph`.

    Adjacency values are binarized, self-loops dropped (counted), and any
    node missing both connectivity and attributes is rejected.
    """
    if adjacency.n_rows != adjacency.n_cols:
        raise DataError(
            f"adjacency must be square, got {adjacency.n_rows}x{adjacency.n_cols}"
        )
    n = adjacency.n_rows
    if attributes.n_rows != n:
        raise DataError(
            f"attribute rows ({attributes.n_rows}) do not match node count ({n})"
        )
    coo = adjacency._csr.tocoo()
    r, c = coo.coords
    off = r != c
    dropped = int(np.sum(~off))
    adj = SparseMatrix.from_coo(n, n, r[off], c[off], np.ones(int(np.sum(off))))

    if node_ids is None:
        node_ids = list(range(n))
    if len(node_ids) != n:
        raise DataError("node_ids length does not match node count")

    conn = np.zeros(n, dtype=bool)
    conn[np.unique(adj._csr.tocoo().coords[0])] = True
    conn[np.unique(adj._csr.tocoo().coords[1])] = True
    has_attr = np.diff(attributes.row_ptr) > 0
    orphans = np.flatnonzero(~conn & ~has_attr)
    if orphans.size:
        raise DataError(
            f"{orphans.size} node(s) have neither edges nor attributes "
            f"(first: index {int(orphans[0])})"
        )

    labels = None
    if labels_by_id is not None:
        labels = np.full(n, -1, dtype=np.int64)
        for i, nid in enumerate(node_ids):
            if nid in labels_by_id:
                labels[i] = labels_by_id[nid]
    return AttributedGraph(
        adjacency=adj,
        attributes=attributes,
        labels=labels,
        node_ids=list(node_ids),
        dropped_self_loops=dropped,
    )


def load_matrix_market(path) -> SparseMatrix:
    """Parse a coordinate-format Matrix Market file.

    Supports real/integer/pattern fields and general/symmetric storage;
    symmetric storage is expanded, duplicates are summed, and indices are
    converted from 1-based.
    """
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline()
        if not header.startswith("%%MatrixMarket"):
            raise DataFormatError(path, 1, "missing %%MatrixMarket header")
        parts = header.strip().split()
        if len(parts) != 5:
            raise DataFormatError(path, 1, f"malformed header: {header.strip()!r}")
        _, obj, fmt, fld, sym = (p.lower() for p in parts)
        if obj != "matrix" or fmt != "coordinate":
            raise DataFormatError(path, 1, "only coordinate matrices are supported")
        if fld not in ("real", "integer", "pattern"):
            raise DataFormatError(path, 1, f"unsupported field {fld!r}")
        if sym not in ("general", "symmetric"):
            raise DataFormatError(path, 1, f"unsupported symmetry {sym!r}")
        pattern = fld == "pattern"

        lineno = 1
        size_line = None
        for line in fh:
            lineno += 1
            if line.startswith("%") or not line.strip():
                continue
            size_line = line
            break
        if size_line is None:
            raise DataFormatError(path, lineno, "missing size line")
        try:
            n_rows, n_cols, nnz = (int(t) for t in size_line.split())
        except ValueError as exc:
            raise DataFormatError(path, lineno, f"bad size line: {exc}") from exc

        rows, cols, vals = [], [], []
        seen = 0
        for line in fh:
            lineno += 1
            if line.startswith("%") or not line.strip():
                continue
            toks = line.split()
            want = 2 if pattern else 3
            if len(toks) < want:
                raise DataFormatError(path, lineno, f"expected {want} fields")
            try:
                i = int(toks[0]) - 1
                j = int(toks[1]) - 1
                v = 1.0 if pattern else float(toks[2])
            except ValueError as exc:
                raise DataFormatError(path, lineno, f"non-numeric entry: {exc}") from exc
            if not (0 <= i < n_rows and 0 <= j < n_cols):
                raise DataFormatError(
                    path, lineno, f"index ({i + 1}, {j + 1}) out of range"
                )
            if not np.isfinite(v):
                raise DataFormatError(path, lineno, "non-finite value")
            rows.append(i)
            cols.append(j)
            vals.append(v)
            if sym == "symmetric" and i != j:
                rows.append(j)
                cols.append(i)
                vals.append(v)
            seen += 1
        if seen != nnz:
            raise DataFormatError(
                path, lineno, f"declared {nnz} entries but found {seen}"
            )
    return SparseMatrix.from_coo(n_rows, n_cols, rows, cols, vals)


def save_matrix_market(S: SparseMatrix, path) -> None:
    """Write in coordinate real general form (1-based, 17 significant digits)."""
    coo = S._csr.tocoo()
    r, c = coo.coords
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("%%MatrixMarket matrix coordinate real general\n")
        fh.write(f"{S.n_rows} {S.n_cols} {S.nnz}\n")
        for i, j, v in zip(r.tolist(), c.tolist(), coo.data.tolist()):
            fh.write(f"{i + 1} {j + 1} {v:.17g}\n")


def load_edge_list(path, directed: bool = False):
    """Parse ``src dst [weight]`` lines into a binarized adjacency.

    Whitespace- or comma-separated; ``#``/``%`` lines are comments.  Node
    ids must be nonnegative integers and are assigned dense indices in
    first-seen order.  Undirected mode mirrors each edge; self-loop lines
    are dropped (with a single warning reporting the count).

    Returns
    -------
    (SparseMatrix, node_ids) where ``node_ids[i]`` is the external id of
    dense index i.
    """
    index: dict[int, int] = {}
    rows, cols = [], []
    self_loops = 0
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#") or line.startswith("%"):
                continue
            toks = line.replace(",", " ").split()
            if len(toks) not in (2, 3):
                raise DataFormatError(path, lineno, f"expected 2 or 3 fields, got {len(toks)}")
            try:
                src, dst = int(toks[0]), int(toks[1])
                if len(toks) == 3:
                    float(toks[2])
            except ValueError as exc:
                raise DataFormatError(path, lineno, f"bad edge line: {exc}") from exc
            if src < 0 or dst < 0:
                raise DataFormatError(path, lineno, "negative node id")
            for nid in (src, dst):
                if nid not in index:
                    index[nid] = len(index)
            if src == dst:
                self_loops += 1
                continue
            rows.append(index[src])
            cols.append(index[dst])
            if not directed:
                rows.append(index[dst])
                cols.append(index[src])
    if self_loops:
        warnings.warn(f"{path}: dropped {self_loops} self-loop line(s)", stacklevel=2)
    n = len(index)
    S = SparseMatrix.from_coo(n, n, rows, cols, np.ones(len(rows)))
    node_ids = [None] * n
    for nid, i in index.items():
        node_ids[i] = nid
    return S, node_ids


def load_labels(path):
    """Parse ``node_id<TAB>class`` lines.

    Class tokens are re-indexed densely in first-seen order.  Duplicate
    identical lines are accepted; conflicting duplicates are an error.

    Returns
    -------
    (labels_by_id, class_names): dict node_id → dense class index, and the
    class token list indexed by class id.
    """
    labels_by_id: dict[int, int] = {}
    class_ids: dict[str, int] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            toks = line.split("\t") if "\t" in line else line.split()
            if len(toks) != 2:
                raise DataFormatError(path, lineno, "expected 'node_id<TAB>class'")
            try:
                nid = int(toks[0])
            except ValueError as exc:
                raise DataFormatError(path, lineno, f"bad node id: {exc}") from exc
            cls = toks[1].strip()
            if cls not in class_ids:
                class_ids[cls] = len(class_ids)
            cid = class_ids[cls]
            if nid in labels_by_id and labels_by_id[nid] != cid:
                raise DataFormatError(path, lineno, f"conflicting label for node {nid}")
            labels_by_id[nid] = cid
    class_names = [None] * len(class_ids)
    for name, cid in class_ids.items():
        class_names[cid] = name
    return labels_by_id, class_names


class LoadedEmbeddings(NamedTuple):
    E: np.ndarray
    node_ids: list
    lam: float | None


def save_embeddings(emb: EmbeddingMatrix, path, format: str = "tsv", node_ids=None) -> None:
    """Persist embeddings as TSV or the binary container.

    TSV rows are ``node_id`` followed by F values at 17 significant digits
    (lossless for float64).  The binary layout is little-endian:
    magic ``GAGE\\0`` | version u32 | N u64 | F u64 | λ f64 | payload | CRC32.
    """
    E = np.ascontiguousarray(emb.E, dtype=np.float64)
    n, f = E.shape
    if node_ids is None:
        node_ids = list(range(n))
    if format == "tsv":
        with open(path, "w", encoding="utf-8") as fh:
            for nid, row in zip(node_ids, E):
                fh.write(str(nid) + "\t" + "\t".join(format_val(v) for v in row) + "\n")
    elif format in ("bin", "binary"):
        payload = E.tobytes(order="C")
        with open(path, "wb") as fh:
            fh.write(_MAGIC)
            fh.write(struct.pack("<I", _VERSION))
            fh.write(struct.pack("<QQd", n, f, float(emb.lam)))
            fh.write(payload)
            fh.write(struct.pack("<I", zlib.crc32(payload) & 0xFFFFFFFF))
    else:
        raise ValueError(f"unknown embedding format {format!r}")


def format_val(v: float) -> str:
    return format(float(v), ".17g")


def load_embeddings(path) -> LoadedEmbeddings:
    """Load embeddings saved by :func:`save_embeddings` (format auto-detected)."""
    with open(path, "rb") as fh:
        head = fh.read(len(_MAGIC))
        if head == _MAGIC:
            version = struct.unpack("<I", fh.read(4))[0]
            if version != _VERSION:
                raise DataError(f"{path}: unsupported embedding version {version}")
            n, f, lam = struct.unpack("<QQd", fh.read(24))
            payload = fh.read(n * f * 8)
            if len(payload) != n * f * 8:
                raise DataError(f"{path}: truncated payload")
            (crc,) = struct.unpack("<I", fh.read(4))
            if crc != zlib.crc32(payload) & 0xFFFFFFFF:
                raise DataError(f"{path}: payload CRC mismatch")
            E = np.frombuffer(payload, dtype="<f8").reshape(n, f).copy()
            return LoadedEmbeddings(E=E, node_ids=list(range(n)), lam=lam)
    ids, rows = [], []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            toks = line.split()
            try:
                ids.append(int(toks[0]))
                rows.append([float(t) for t in toks[1:]])
            except ValueError as exc:
                raise DataFormatError(path, lineno, f"bad embedding row: {exc}") from exc
    if not rows:
        raise DataError(f"{path}: no embedding rows")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise DataError(f"{path}: ragged embedding rows")
    return LoadedEmbeddings(E=np.asarray(rows, dtype=np.float64), node_ids=ids, lam=None)


def write_manifest(path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def file_sha256(path) -> str:
    import hashlib

    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()
