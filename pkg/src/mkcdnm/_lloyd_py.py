"""Pure-numpy Lloyd iteration, used when the compiled kernel is unavailable.

Distances, centroid sums and the inertia are accumulated in the same order
as ``_lloyd.pyx`` so both backends return bit-identical results.
"""
import numpy as np


def lloyd_core(X, centers, max_iter):
    n, p = X.shape
    k = centers.shape[0]
    labels = np.full(n, -1, dtype=np.intp)
    history = []
    rows = np.arange(n)

    it = 0
    while it < max_iter:
        d = np.zeros((n, k))
        for f in range(p):
            diff = X[:, f, None] - centers[None, :, f]
            d += diff * diff
        new = np.argmin(d, axis=1)
        mind = d[rows, new]
        changed = bool(np.any(new != labels))
        labels = new
        history.append(float(np.cumsum(mind)[-1]))
        it += 1
        if not changed:
            break

        counts = np.bincount(labels, minlength=k)
        for f in range(p):
            sums = np.bincount(labels, weights=X[:, f], minlength=k)
            nz = counts > 0
            centers[nz, f] = sums[nz] / counts[nz]
        for j in np.flatnonzero(counts == 0):
            far = int(np.argmax(mind))
            mind[far] = -1.0
            centers[j] = X[far]

    return labels, centers, history
