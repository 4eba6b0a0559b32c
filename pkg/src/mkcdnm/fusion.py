"""Consensus partition from the optimised per-view feature matrices."""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import InputError, RankError
from .lloyd import KMeansResult, kmeans
from .spectral import RANK_RTOL


class ConsensusResult(NamedTuple):
    H: np.ndarray
    labels: np.ndarray
    spectrum: np.ndarray     # eigenvalues of sum_p U_p U_p^T, descending
    kmeans: KMeansResult


def _stack(U_list):
    U_list = [np.asarray(U, dtype=np.float64) for U in U_list]
    if not U_list:
        raise InputError("need at least one feature matrix")
    rows = {U.shape[0] for U in U_list}
    if len(rows) != 1:
        raise InputError(f"views disagree on sample count: {sorted(rows)}")
    return np.hstack(U_list)


def consensus_basis(U_list, k, method="auto"):
    """Top-k eigenvectors of ``sum_p U_p U_p^T`` and the full spectrum.

    ``method="svd"`` takes left singular vectors of the concatenation
    ``[U_1 ... U_m]``; ``method="eig"`` diagonalises the n x n projector sum.
    ``"auto"`` picks the cheaper one.  Both return the same projector.
    """
    C = _stack(U_list)
    n, width = C.shape
    if method == "auto":
        method = "eig" if width > n else "svd"
    if method == "svd":
        L, s, _ = np.linalg.svd(C, full_matrices=False)
        lam = s ** 2
    elif method == "eig":
        w, V = np.linalg.eigh(C @ C.T)
        order = np.argsort(-w, kind="stable")
        lam, L = w[order], V[:, order]
    else:
        raise InputError(f"unknown method {method!r}")
    rank = int(np.count_nonzero(lam > RANK_RTOL * lam[0])) if lam.size and lam[0] > 0 else 0
    if rank < k:
        raise RankError(f"concatenated features have rank {rank} < k={k}", max_feasible=rank)
    return np.ascontiguousarray(L[:, :k]), lam


def consensus_partition(U_list, k, restarts=50, seed=0, *, method="auto", backend=None):
    """Fuse feature matrices into H* and label samples by k-means on its rows."""
    H, lam = consensus_basis(U_list, k, method)
    km = kmeans(H, k, restarts=restarts, seed=seed, backend=backend)
    return ConsensusResult(H, km.labels, lam, km)
