"""Symmetric eigendecomposition, truncated features and kernel k-means."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels
from .errors import InputError, NumericError, RankError
from .lloyd import KMeansResult, kmeans

log = logging.getLogger(__name__)

RANK_RTOL = 1e-10


@dataclass(frozen=True)
class EigenSystem:
    """Full spectral decomposition with eigenvalues in descending order.

    Column ``i`` of ``eigenvectors`` pairs with ``eigenvalues[i]``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def n(self):
        return self.eigenvalues.shape[0]

    @property
    def rank(self):
        """Number of leading eigenvalues above ``1e-10 * lambda_1``."""
        lam = self.eigenvalues
        if lam.size == 0 or lam[0] <= 0:
            return 0
        return int(np.count_nonzero(lam > RANK_RTOL * lam[0]))

    def truncate(self, d):
        return truncate_features(self, d)


def symmetric_eig(A):
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InputError(f"expected a square matrix, got shape {A.shape}")
    scale = np.abs(A).max() if A.size else 0.0
    if A.size and np.abs(A - A.T).max() > kernels.SYMMETRY_RTOL * scale:
        raise InputError("matrix is not symmetric")
    try:
        w, V = np.linalg.eigh(A)
    except np.linalg.LinAlgError as exc:
        # LAPACK reports the number of off-diagonal elements that failed to converge
        raise NumericError(f"symmetric eigensolver did not converge: {exc}") from None
    order = np.argsort(-w, kind="stable")
    return EigenSystem(w[order], np.ascontiguousarray(V[:, order]))


def truncate_features(es, d):
    """Leading ``d`` eigenvectors of ``es`` as an n x d orthonormal matrix.

    The result for ``d`` is always the column prefix of the result for
    ``d + 1``; callers rely on this for monotone alignment searches.
    """
    d = int(d)
    if not 1 <= d <= es.n:
        raise InputError(f"dimension must lie in [1, {es.n}], got {d}")
    r = es.rank
    if d > r:
        raise RankError(f"dimension {d} exceeds numerical rank {r}", max_feasible=r)
    return es.eigenvectors[:, :d]


def orthonormality_error(U):
    U = np.asarray(U)
    return float(np.abs(U.T @ U - np.eye(U.shape[1])).max())


def projector(U):
    return U @ U.T


class KernelKMeansResult(NamedTuple):
    H: np.ndarray
    labels: np.ndarray
    objective: float
    kmeans: KMeansResult


def kernel_kmeans(K, k, restarts=50, seed=0, *, strict=True, eig=None, backend=None):
    """Spectral relaxation of kernel k-means followed by Lloyd on the rows of H.

    ``H`` holds the top-``k`` eigenvectors of ``K``; the objective is
    ``Tr((I - H H^T) K)``.  With ``strict=False`` an indefinite ``K`` only
    logs a warning, which diagnostic runs on denoised kernels need.
    """
    if strict:
        K = kernels.validate_kernel(K)
    else:
        K = kernels.validate_kernel(K, check_psd=False)
    es = symmetric_eig(K) if eig is None else eig
    if not strict and es.eigenvalues[-1] < -kernels.PSD_RTOL * max(es.eigenvalues[0], 0.0):
        log.warning("kernel is indefinite (smallest eigenvalue %.3g)", es.eigenvalues[-1])
    H = truncate_features(es, k)
    objective = float(np.trace(K) - es.eigenvalues[:k].sum())
    km = kmeans(H, k, restarts=restarts, seed=seed, backend=backend)
    return KernelKMeansResult(H, km.labels, objective, km)


def average_kernel(kernels_):
    kernels_ = [np.asarray(K, dtype=np.float64) for K in kernels_]
    if not kernels_:
        raise InputError("need at least one kernel")
    shape = kernels_[0].shape
    for i, K in enumerate(kernels_):
        if K.shape != shape:
            raise InputError(f"kernel {i} has shape {K.shape}, expected {shape}")
    return sum(kernels_) / len(kernels_)


def average_kernel_kmeans(kernels_, k, restarts=50, seed=0, *, backend=None):
    """Kernel k-means on the unweighted mean of the base kernels."""
    return kernel_kmeans(average_kernel(kernels_), k, restarts, seed, backend=backend)
