#!/usr/bin/env python3
"""Write a planted-community attributed graph in the dataset layout.

Usage: make_synthetic.py OUTPUT_DIR [N] [CLASSES] [SEED]

Latent class geometry drives both the connectivity and the attributes, so
the resulting files exercise the full embed/eval pipeline end to end.
"""

import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from gage import SparseMatrix, save_matrix_market  # noqa: E402


def main(argv):
    if not 1 <= len(argv) <= 4:
        raise SystemExit(__doc__)
    out_dir = Path(argv[0])
    n = int(argv[1]) if len(argv) > 1 else 120
    n_classes = int(argv[2]) if len(argv) > 2 else 3
    seed = int(argv[3]) if len(argv) > 3 else 0
    out_dir.mkdir(parents=True, exist_ok=True)

    rng = np.random.default_rng(seed)
    labels = np.repeat(np.arange(n_classes), n // n_classes + 1)[:n]
    centers = 2.5 * rng.standard_normal((n_classes, 4))
    latent = centers[labels] + 0.6 * rng.standard_normal((n, 4))

    rows, cols = [], []
    for i in range(n):
        for j in range(i + 1, n):
            d2 = float(np.sum((latent[i] - latent[j]) ** 2))
            if rng.random() < np.exp(-0.4 * d2):
                rows += [i, j]
                cols += [j, i]
    adjacency = SparseMatrix.from_coo(n, n, rows, cols, np.ones(len(rows)))

    d = 4 * n_classes
    attrs = 0.3 * rng.standard_normal((n, d))
    attrs[:, :4] += latent
    attributes = SparseMatrix.from_dense(attrs)

    save_matrix_market(adjacency, out_dir / "adjacency.mtx")
    save_matrix_market(attributes, out_dir / "attributes.mtx")
    with open(out_dir / "labels.tsv", "w") as fh:
        for i, c in enumerate(labels.tolist()):
            fh.write(f"{i}\t{c}\n")
    print(f"wrote {out_dir}: n={n}, edges={adjacency.nnz // 2}, "
          f"d={d}, classes={n_classes}")


if __name__ == "__main__":
    main(sys.argv[1:])
