"""Split a view's partition noise into null-space and column-space parts.

For a feature matrix ``U`` (orthonormal, n x d) and a reference partition
``H`` (orthonormal, n x k) the total noise is ``E = U U^T - H H^T``.  With
``P = H H^T`` and ``Q = I - P`` we take

    E_C = P E P        column-space noise, negative semidefinite
    E_N = Q E Q        null-space noise, positive semidefinite
    R   = P E Q + Q E P

so that ``E = E_N + E_C + R`` and ``Tr(R) = 0``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError, NumericError
from .spectral import orthonormality_error

ORTHO_TOL = 1e-8
SPLIT_TOL = 1e-10
SUBSPACE_TOL = 1e-8
DENOISE_MODES = ("none", "remove_N", "remove_C", "remove_both")


@dataclass(frozen=True)
class NoiseDecomposition:
    E: np.ndarray
    E_N: np.ndarray
    E_C: np.ndarray
    R: np.ndarray

    @property
    def traces(self):
        return float(np.trace(self.E)), float(np.trace(self.E_N)), float(np.trace(self.E_C))

    @property
    def tr_R(self):
        return float(np.trace(self.R))


def indicator_partition(labels, k=None):
    """Column-normalized cluster indicator matrix (orthonormal columns).

    Empty clusters are dropped, so the result has one column per label
    actually present.
    """
    labels = np.asarray(labels, dtype=np.int64)
    if k is None:
        k = int(labels.max()) + 1
    Y = np.zeros((labels.size, k))
    Y[np.arange(labels.size), labels] = 1.0
    counts = Y.sum(axis=0)
    Y = Y[:, counts > 0]
    return Y / np.sqrt(counts[counts > 0])


def _check_pair(U, H):
    U = np.asarray(U, dtype=np.float64)
    H = np.asarray(H, dtype=np.float64)
    if U.ndim != 2 or H.ndim != 2 or U.shape[0] != H.shape[0]:
        raise InputError(f"U {U.shape} and H {H.shape} must share the row count")
    if orthonormality_error(U) > ORTHO_TOL:
        raise InputError("U does not have orthonormal columns")
    if orthonormality_error(H) > ORTHO_TOL:
        raise InputError("H does not have orthonormal columns")
    return U, H


def decompose_noise(U, H, *, check=True):
    U, H = _check_pair(U, H)
    A = H.T @ U                  # k x d
    QU = U - H @ A               # columns of U with col(H) removed
    HA = H @ A
    E = U @ U.T - H @ H.T
    E_N = QU @ QU.T
    E_C = H @ (A @ A.T - np.eye(H.shape[1])) @ H.T
    cross = HA @ QU.T
    R = cross + cross.T
    E, E_N, E_C, R = (0.5 * (M + M.T) for M in (E, E_N, E_C, R))
    dec = NoiseDecomposition(E, E_N, E_C, R)
    if check:
        _verify(dec, H)
    return dec


def _verify(dec, H):
    split = np.abs(dec.E_N + dec.E_C + dec.R - dec.E).max()
    if split > SPLIT_TOL:
        raise NumericError(f"noise split does not add up (residual {split:.3g})")
    null_leak = np.abs(H.T @ dec.E_N).max()
    if null_leak > SUBSPACE_TOL:
        raise NumericError(f"N-noise leaks into col(H) ({null_leak:.3g})")
    col_leak = np.abs(dec.E_C - H @ (H.T @ dec.E_C)).max()
    if col_leak > SUBSPACE_TOL:
        raise NumericError(f"C-noise leaks out of col(H) ({col_leak:.3g})")
    min_n, max_c = check_lemma3(dec)
    if min_n < -SUBSPACE_TOL or max_c > SUBSPACE_TOL:
        raise NumericError(f"semidefiniteness violated (min eig E_N {min_n:.3g}, max eig E_C {max_c:.3g})")


def check_lemma1(dec, H):
    """|Tr(E_N H H^T)|: N-noise is invisible to the partition."""
    return float(abs(np.sum((dec.E_N @ H) * H)))


def check_lemma2(dec, H):
    """|Tr(E_C H H^T) - Tr(E_C)|: C-noise lives entirely inside col(H)."""
    return float(abs(np.sum((dec.E_C @ H) * H) - np.trace(dec.E_C)))


def check_lemma3(dec):
    """(smallest eigenvalue of E_N, largest eigenvalue of E_C)."""
    return float(np.linalg.eigvalsh(dec.E_N)[0]), float(np.linalg.eigvalsh(dec.E_C)[-1])


def alignment_matrix(U_list):
    """Pairwise ``||U_p^T U_q||_F^2`` for a list of feature matrices."""
    U_list = [np.asarray(U, dtype=np.float64) for U in U_list]
    n = {U.shape[0] for U in U_list}
    if len(n) != 1:
        raise InputError(f"views disagree on sample count: {sorted(n)}")
    m = len(U_list)
    S = np.empty((m, m))
    for p in range(m):
        for q in range(p, m):
            S[p, q] = S[q, p] = float(np.sum((U_list[p].T @ U_list[q]) ** 2))
    return S


check_theorem1 = alignment_matrix


def check_theorem2(dec_list, d, k):
    """Residual of  sum_p Tr(E_N^p) = sum_p d_p - sum_p (k + Tr(E_C^p))."""
    d = np.asarray(d, dtype=np.float64)
    lhs = sum(np.trace(dec.E_N) for dec in dec_list)
    rhs = d.sum() - sum(k + np.trace(dec.E_C) for dec in dec_list)
    return float(abs(lhs - rhs))


def denoise_kernel(U, H, mode="remove_both"):
    """Projector ``U U^T`` with the selected noise components subtracted.

    ``remove_both`` leaves ``H H^T + R``; the cross term can make the result
    slightly indefinite.
    """
    if mode not in DENOISE_MODES:
        raise InputError(f"mode must be one of {DENOISE_MODES}, got {mode!r}")
    U, H = _check_pair(U, H)
    K = U @ U.T
    if mode != "none":
        dec = decompose_noise(U, H, check=False)
        if mode in ("remove_N", "remove_both"):
            K = K - dec.E_N
        if mode in ("remove_C", "remove_both"):
            K = K - dec.E_C
    return 0.5 * (K + K.T)


def make_noisy_view(H_true, n_extra=0, tilt_angles=(), seed=0):
    """Feature matrix carrying a known amount of each noise type.

    The first ``len(tilt_angles)`` columns of ``H_true`` are rotated by the
    given angles towards fresh directions orthogonal to col(H_true), which
    yields ``Tr(E_C) = sum(cos^2 - 1)``.  ``n_extra`` further orthogonal
    columns are appended as pure N-noise, so ``Tr(E_N) = n_extra + sum(sin^2)``.
    """
    H = np.asarray(H_true, dtype=np.float64)
    n, k = H.shape
    angles = np.asarray(tilt_angles, dtype=np.float64).ravel()
    if n_extra < 0:
        raise InputError("n_extra must be >= 0")
    if angles.size > k:
        raise InputError(f"at most k={k} tilt angles, got {angles.size}")
    if np.any(angles < 0) or np.any(angles >= np.pi / 2):
        raise InputError("tilt angles must lie in [0, pi/2)")
    extra = angles.size + int(n_extra)
    if k + extra > n:
        raise InputError(f"view needs {k + extra} orthogonal directions but n={n}")

    rng = np.random.default_rng(seed)
    W = np.empty((n, 0))
    if extra:
        G = rng.standard_normal((n, extra))
        for _ in range(2):  # twice for numerical orthogonality against H
            G = G - H @ (H.T @ G)
        W, _ = np.linalg.qr(G)
    tilted = H[:, :angles.size] * np.cos(angles) + W[:, :angles.size] * np.sin(angles)
    return np.hstack([tilted, H[:, angles.size:], W[:, angles.size:]])
