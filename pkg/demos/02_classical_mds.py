"""Classical MDS from a squared-distance matrix, the scalar building block.

Plant points in the plane, form their squared Euclidean distances, convert
to a Gram matrix by double centering, and recover coordinates from the top
eigenpairs.  The recovery is exact up to rotation/reflection, which is all
a distance matrix can determine.
"""

import numpy as np

from gage import classical_mds, mds_gram_from_distances

rng = np.random.default_rng(3)
points = rng.standard_normal((12, 2)) * [3.0, 1.0]  # elongated cloud

D2 = np.add.outer((points**2).sum(1), (points**2).sum(1)) - 2 * points @ points.T
D2 = np.maximum(D2, 0.0)
np.fill_diagonal(D2, 0.0)

G = mds_gram_from_distances(D2)
coords = classical_mds(G, 2)

# distances are reproduced ...
D2_hat = np.add.outer((coords**2).sum(1), (coords**2).sum(1)) - 2 * coords @ coords.T
print("max distance error:", np.abs(D2_hat - D2).max())

# ... and the configuration matches after aligning with a Procrustes rotation
centered = points - points.mean(axis=0)
Uo, _, Vt = np.linalg.svd(coords.T @ centered)
rotated = coords @ (Uo @ Vt)
print("max coordinate error after alignment:", np.abs(rotated - centered).max())
