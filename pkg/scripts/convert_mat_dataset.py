#!/usr/bin/env python3
"""Convert a .mat attributed-network bundle to the mtx/tsv layout.

Usage: convert_mat_dataset.py INPUT.mat OUTPUT_DIR

Looks for the adjacency under keys {network, A, adj}, attributes under
{attrb, attributes, features, X}, labels under {group, labels, gnd, Y}.
Matrices are written as-is; labels may be one-hot or an integer vector.
"""

import hashlib
import json
import sys
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse as sp

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from gage import SparseMatrix, save_matrix_market  # noqa: E402

ADJ_KEYS = ("network", "A", "adj", "W")
ATTR_KEYS = ("attrb", "attributes", "features", "X")
LABEL_KEYS = ("group", "labels", "gnd", "Y")


def pick(d, keys, what):
    for k in keys:
        if k in d:
            return d[k]
    raise SystemExit(f"no {what} found; tried keys {keys}, file has {sorted(d)}")


def to_sparse(M) -> SparseMatrix:
    S = sp.csr_array(sp.csr_matrix(M))
    return SparseMatrix(S.shape[0], S.shape[1], S.indptr, S.indices, S.data)


def main(argv):
    if len(argv) != 2:
        raise SystemExit(__doc__)
    src, out_dir = Path(argv[0]), Path(argv[1])
    out_dir.mkdir(parents=True, exist_ok=True)
    blob = scipy.io.loadmat(src)

    adj = to_sparse(pick(blob, ADJ_KEYS, "adjacency"))
    attrs = to_sparse(pick(blob, ATTR_KEYS, "attributes"))
    raw_labels = pick(blob, LABEL_KEYS, "labels")

    labels = np.asarray(
        sp.csr_matrix(raw_labels).toarray()
        if sp.issparse(raw_labels) else raw_labels
    )
    if labels.ndim == 2 and labels.shape[1] > 1:  # one-hot rows
        unlabeled = labels.sum(axis=1) == 0
        ids = labels.argmax(axis=1)
    else:
        ids = labels.ravel().astype(np.int64)
        unlabeled = np.zeros(ids.size, dtype=bool)
        ids = ids - ids[~unlabeled].min()  # some bundles are 1-based

    save_matrix_market(adj, out_dir / "adjacency.mtx")
    save_matrix_market(attrs, out_dir / "attributes.mtx")
    with open(out_dir / "labels.tsv", "w") as fh:
        for i, (c, skip) in enumerate(zip(ids.tolist(), unlabeled.tolist())):
            if not skip:
                fh.write(f"{i}\t{c}\n")

    digest = hashlib.sha256(src.read_bytes()).hexdigest()
    with open(out_dir / "source.json", "w") as fh:
        json.dump({"source": str(src), "sha256": digest,
                   "n": adj.n_rows, "attr_dim": attrs.n_cols}, fh, indent=2)
    print(f"wrote {out_dir}: n={adj.n_rows}, nnz(adj)={adj.nnz}, "
          f"d={attrs.n_cols}, labeled={int((~unlabeled).sum())}")


if __name__ == "__main__":
    main(sys.argv[1:])
