"""Multi-restart Lloyd k-means on the rows of an embedding.

The per-restart loop runs in a compiled extension when it is built and in
numpy otherwise; set ``MKCDNM_PURE_PYTHON=1`` to force the fallback.
"""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import _lloyd_py
from .errors import InputError

MAX_ITER = 300

_lloyd_c = None
if not os.environ.get("MKCDNM_PURE_PYTHON"):
    try:
        from . import _lloyd as _lloyd_c
    except ImportError:  # extension not built
        _lloyd_c = None

BACKEND = "cython" if _lloyd_c is not None else "python"


def available_backends():
    return ("cython", "python") if _lloyd_c is not None else ("python",)


def _core(backend):
    if backend is None:
        backend = BACKEND
    if backend == "cython":
        if _lloyd_c is None:
            raise InputError("compiled Lloyd backend is not available")
        return _lloyd_c.lloyd_core
    if backend == "python":
        return _lloyd_py.lloyd_core
    raise InputError(f"unknown backend {backend!r}")


@dataclass
class KMeansResult:
    labels: np.ndarray          # 0-based ids of the best restart
    centers: np.ndarray
    inertia: float              # within-cluster sum of squares of the best restart
    n_iter: int
    best_restart: int
    all_labels: np.ndarray      # (restarts, n)
    all_inertia: np.ndarray     # (restarts,)
    history: list               # WCSS after every assignment step of the best restart


def restart_rng(seed, restart):
    """Independent generator for one restart, derived from (seed, restart)."""
    return np.random.default_rng([int(seed), int(restart)])


def lloyd(X, centers, max_iter=MAX_ITER, backend=None):
    """One Lloyd run from the given initial centers.

    Returns ``(labels, centers, history)`` where ``history`` holds the
    within-cluster sum of squares after each assignment step.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    C = np.array(centers, dtype=np.float64, order="C", copy=True)
    labels, C, history = _core(backend)(X, C, int(max_iter))
    return np.asarray(labels, dtype=np.int64), np.asarray(C), list(history)


def kmeans(X, k, restarts=50, seed=0, max_iter=MAX_ITER, backend=None):
    """Lloyd's k-means with ``restarts`` seeded random initializations.

    Each restart starts from ``k`` distinct rows drawn uniformly.  The run
    with the lowest within-cluster sum of squares wins; ties go to the
    lower restart index.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise InputError("k-means input must be 2-d")
    n = X.shape[0]
    if not 1 <= k <= n:
        raise InputError(f"need 1 <= k <= n, got k={k}, n={n}")
    if restarts < 1:
        raise InputError("restarts must be >= 1")
    if seed < 0:
        raise InputError("seed must be non-negative")

    all_labels = np.empty((restarts, n), dtype=np.int64)
    all_inertia = np.empty(restarts)
    best = None
    for r in range(restarts):
        idx = restart_rng(seed, r).choice(n, size=k, replace=False)
        labels, C, hist = lloyd(X, X[idx], max_iter, backend)
        all_labels[r] = labels
        all_inertia[r] = hist[-1]
        if best is None or hist[-1] < best[1][-1]:
            best = (r, hist, labels, C)

    r, hist, labels, C = best
    return KMeansResult(labels, C, float(hist[-1]), len(hist), r, all_labels, all_inertia, hist)
