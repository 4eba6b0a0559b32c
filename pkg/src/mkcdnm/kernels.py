"""Kernel construction, validation, preprocessing and file I/O."""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import DegenerateSampleError, FormatError, InputError

MAGIC = b"MKCK"
VERSION = 1
_HEADER = struct.Struct("<4sII")

SYMMETRY_RTOL = 1e-10
PSD_RTOL = 1e-8
DEGENERATE_DIAG = 1e-12


def validate_kernel(K, *, check_psd=True, error=InputError):
    """Return ``K`` as a float64 array after checking the kernel invariants.

    Symmetry is checked relative to ``max|K|``; PSD is checked as
    ``min eig >= -1e-8 * max eig``.  Kernels failing either check are
    rejected, never repaired.
    """
    K = np.asarray(K, dtype=np.float64)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise error(f"kernel must be square, got shape {K.shape}")
    if not np.all(np.isfinite(K)):
        raise error("kernel has non-finite entries")
    scale = np.abs(K).max() if K.size else 0.0
    asym = np.abs(K - K.T).max() if K.size else 0.0
    if asym > SYMMETRY_RTOL * scale:
        raise error(f"kernel is not symmetric (max |K - K^T| = {asym:.3g})")
    if check_psd and K.size:
        w = np.linalg.eigvalsh(K)
        if w[0] < -PSD_RTOL * max(w[-1], 0.0):
            raise error(f"kernel is not PSD (smallest eigenvalue {w[0]:.3g}, largest {w[-1]:.3g})")
    return K


def build_kernel(features, kind="rbf", *, gamma=1.0, degree=2, coef=1.0):
    """Build an n x n kernel from an n x dim feature matrix.

    Parameters
    ----------
    features : array_like, shape (n, dim)
    kind : {"linear", "rbf", "polynomial"}
    gamma : float
        Width of the rbf kernel ``exp(-gamma * ||x_i - x_j||^2)``.
    degree, coef : int, float
        Polynomial kernel ``(x_i . x_j + coef) ** degree``.
    """
    X = np.asarray(features, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise InputError(f"features must be a 2-d array, got {X.ndim} dims")
    if X.shape[0] < 2:
        raise InputError("need at least two samples to build a kernel")
    if not np.all(np.isfinite(X)):
        raise InputError("features contain non-finite entries")

    if kind == "linear":
        K = X @ X.T
    elif kind == "rbf":
        if not gamma > 0:
            raise InputError(f"rbf kernel needs gamma > 0, got {gamma}")
        sq = np.einsum("ij,ij->i", X, X)
        d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * (X @ X.T), 0.0)
        np.fill_diagonal(d2, 0.0)
        K = np.exp(-gamma * d2)
    elif kind == "polynomial":
        if int(degree) != degree or degree < 1:
            raise InputError(f"polynomial degree must be a positive integer, got {degree}")
        K = (X @ X.T + coef) ** int(degree)
    else:
        raise InputError(f"unknown kernel kind {kind!r}")
    # symmetrize away round-off from the BLAS product
    K = 0.5 * (K + K.T)
    return validate_kernel(K)


def center_kernel(K):
    K = np.asarray(K, dtype=np.float64)
    col = K.mean(axis=0)
    row = K.mean(axis=1)
    return K - col[None, :] - row[:, None] + K.mean()


def normalize_kernel(K):
    """Rescale a kernel to unit diagonal, ``K_ij / sqrt(K_ii K_jj)``.

    Raises :class:`DegenerateSampleError` when a self-similarity is <= 1e-12.
    """
    K = validate_kernel(K, check_psd=False)
    diag = np.diag(K).copy()
    bad = np.flatnonzero(diag <= DEGENERATE_DIAG)
    if bad.size:
        raise DegenerateSampleError(
            f"{bad.size} sample(s) have vanishing self-similarity (first index {bad[0]})"
        )
    s = 1.0 / np.sqrt(diag)
    Kn = K * s[:, None] * s[None, :]
    Kn = 0.5 * (Kn + Kn.T)
    np.fill_diagonal(Kn, 1.0)
    return Kn


def center_and_normalize(K):
    """Center a kernel in feature space, then rescale it to unit diagonal.

    Raises :class:`DegenerateSampleError` when some sample sits on the
    dataset mean (its centered self-similarity is <= 1e-12).
    """
    Kc = center_kernel(validate_kernel(K, check_psd=False))
    if np.any(np.diag(Kc) <= DEGENERATE_DIAG):
        bad = np.flatnonzero(np.diag(Kc) <= DEGENERATE_DIAG)
        raise DegenerateSampleError(
            f"{bad.size} sample(s) coincide with the feature-space mean (first index {bad[0]})"
        )
    return normalize_kernel(Kc)


PREPROCESSORS = {
    "center-normalize": center_and_normalize,
    "center": center_kernel,
    "normalize": normalize_kernel,
    "none": lambda K: np.asarray(K, dtype=np.float64),
}


def preprocess(K, method="center-normalize"):
    try:
        fn = PREPROCESSORS[method]
    except KeyError:
        raise InputError(f"unknown preprocessing {method!r}; choose from {sorted(PREPROCESSORS)}") from None
    return fn(K)


# ---------------------------------------------------------------- file I/O


def save_kernel(K, path):
    """Write ``K`` in the binary MKCK format (or CSV when the suffix is .csv)."""
    K = validate_kernel(K, check_psd=False, error=FormatError)
    path = Path(path)
    if path.suffix.lower() == ".csv":
        # repr() is the shortest string that round-trips a float64 exactly
        lines = (",".join(repr(float(v)) for v in row) for row in K)
        path.write_text("\n".join(lines) + "\n")
        return
    n = K.shape[0]
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, n))
        fh.write(np.ascontiguousarray(K, dtype="<f8").tobytes())


def load_kernel(path, *, check_psd=True):
    path = Path(path)
    if not path.is_file():
        raise InputError(f"kernel file not found: {path}")
    if path.suffix.lower() == ".csv":
        K = _read_csv(path)
    else:
        K = _read_binary(path)
    return validate_kernel(K, check_psd=check_psd, error=FormatError)


def _read_binary(path):
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise FormatError(f"{path}: truncated header")
    magic, version, n = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    payload = raw[_HEADER.size:]
    if len(payload) != 8 * n * n:
        raise FormatError(f"{path}: header says n={n} but payload holds {len(payload)} bytes")
    return np.frombuffer(payload, dtype="<f8").reshape(n, n).astype(np.float64)


def _read_csv(path):
    rows = [ln for ln in path.read_text().splitlines() if ln.strip()]
    try:
        data = [[float(tok) for tok in ln.split(",")] for ln in rows]
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None
    n = len(data)
    if n == 0 or any(len(r) != n for r in data):
        raise FormatError(f"{path}: expected {n} rows of {n} values")
    return np.array(data, dtype=np.float64)


def load_labels(path):
    """Read a labels file (one 1-based integer per line) into 0-based ids."""
    path = Path(path)
    try:
        vals = [int(ln) for ln in path.read_text().split()]
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None
    labels = np.array(vals, dtype=np.int64)
    if labels.size == 0 or labels.min() < 1:
        raise FormatError(f"{path}: labels must be 1-based positive integers")
    return labels - 1


def save_labels(labels, path):
    labels = np.asarray(labels, dtype=np.int64)
    Path(path).write_text("".join(f"{v + 1}\n" for v in labels))
