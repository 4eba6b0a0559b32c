# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Lloyd iteration for one k-means restart.

Must stay numerically identical to ``_lloyd_py.lloyd_core``: same loop
order for distances, centroid sums and the inertia accumulator.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY

cnp.import_array()


def lloyd_core(const double[:, ::1] X, double[:, ::1] centers, int max_iter):
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t p = X.shape[1]
    cdef Py_ssize_t k = centers.shape[0]
    cdef Py_ssize_t i, j, f, it, best_j, far
    cdef double d, diff, best, inertia, far_d
    cdef bint changed

    labels_arr = np.full(n, -1, dtype=np.intp)
    mind_arr = np.empty(n, dtype=np.float64)
    counts_arr = np.zeros(k, dtype=np.intp)
    sums_arr = np.zeros((k, p), dtype=np.float64)
    cdef Py_ssize_t[::1] labels = labels_arr
    cdef double[::1] mind = mind_arr
    cdef Py_ssize_t[::1] counts = counts_arr
    cdef double[:, ::1] sums = sums_arr
    history = []

    it = 0
    while it < max_iter:
        # assignment
        changed = False
        inertia = 0.0
        for i in range(n):
            best = INFINITY
            best_j = 0
            for j in range(k):
                d = 0.0
                for f in range(p):
                    diff = X[i, f] - centers[j, f]
                    d = d + diff * diff
                if d < best:
                    best = d
                    best_j = j
            if labels[i] != best_j:
                changed = True
                labels[i] = best_j
            mind[i] = best
            inertia = inertia + best
        history.append(inertia)
        it += 1
        if not changed:
            break

        # update
        for j in range(k):
            counts[j] = 0
            for f in range(p):
                sums[j, f] = 0.0
        for i in range(n):
            j = labels[i]
            counts[j] += 1
            for f in range(p):
                sums[j, f] = sums[j, f] + X[i, f]
        for j in range(k):
            if counts[j] > 0:
                for f in range(p):
                    centers[j, f] = sums[j, f] / counts[j]
            else:
                # empty cluster: reseed on the worst-served point
                far = 0
                far_d = -1.0
                for i in range(n):
                    if mind[i] > far_d:
                        far_d = mind[i]
                        far = i
                mind[far] = -1.0
                for f in range(p):
                    centers[j, f] = X[far, f]

    return labels_arr, np.asarray(centers), history
