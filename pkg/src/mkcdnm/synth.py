"""Seeded synthetic multi-view datasets written in the on-disk layout.

Two variants are available:

``projector``
    Each view is the projector ``U_p U_p^T`` of a feature matrix produced by
    :func:`mkcdnm.noise.make_noisy_view`, so the amount of N- and C-noise per
    view is known exactly.  Kernels are used without preprocessing.
``rbf-blobs``
    Gaussian blobs whose cluster signal is shared by all views through a
    view-specific linear map, while each view also carries its own strong
    nuisance grouping.  Kernels are rbf with the median heuristic.

Named profiles expand into a full spec; the manifest written next to the
kernels always holds the expanded spec, so replaying it is exact.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial.distance import pdist

from .errors import InputError
from .kernels import build_kernel, save_kernel, save_labels
from .noise import indicator_partition, make_noisy_view

MANIFEST = "manifest.json"
VARIANTS = ("projector", "rbf-blobs")

# calibrated once; see tests/test_acceptance.py
BLOB_DEFAULTS = {
    "signal_scale": 1.0,
    "shared_noise": 0.35,
    "nuisance_scale": 4.0,
    "nuisance_jitter": 0.3,
    "isotropic_scale": 0.5,
    "isotropic_dims": 2,
}


@dataclass
class SyntheticSpec:
    n: int
    k: int
    m: int
    seed: int = 0
    variant: str = "projector"
    views: list = field(default_factory=list)   # per view {"n_extra", "tilt_angles"}
    blob: dict = field(default_factory=dict)
    preprocess: str = "none"
    profile: str = "custom"

    def validate(self):
        if self.variant not in VARIANTS:
            raise InputError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.k < 2:
            raise InputError("k must be >= 2")
        if self.m < 1:
            raise InputError("m must be >= 1")
        if self.n < 4 * self.k:
            raise InputError(f"need n >= 4k, got n={self.n}, k={self.k}")
        if self.variant == "projector":
            if len(self.views) != self.m:
                raise InputError(f"profile lists {len(self.views)} views but m={self.m}")
            for p, v in enumerate(self.views):
                need = self.k + int(v.get("n_extra", 0))
                if need > self.n:
                    raise InputError(f"view {p} needs {need} orthogonal directions but n={self.n}")
        else:
            unknown = set(self.blob) - set(BLOB_DEFAULTS)
            if unknown:
                raise InputError(f"unknown blob parameters: {sorted(unknown)}")
        return self

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        try:
            return cls(**data).validate()
        except TypeError as exc:
            raise InputError(f"bad synthetic spec: {exc}") from None


def _clean(n, k, m):
    return [{"n_extra": 0, "tilt_angles": []} for _ in range(m)]


def _ladder(n, k, m):
    # view 0: every cluster direction tilted hard (C-noise dominant)
    # view 1: milder tilts plus many extra columns (N-noise dominant)
    if m != 2:
        raise InputError("the denoise-ladder profile has exactly 2 views")
    return [
        {"n_extra": 0, "tilt_angles": [float(np.deg2rad(85.0))] * k},
        {"n_extra": 2 * k, "tilt_angles": [float(np.deg2rad(60.0))] * k},
    ]


PROFILES = {
    "clean": ("projector", _clean, "none"),
    "denoise-ladder": ("projector", _ladder, "none"),
    "rbf-blobs": ("rbf-blobs", None, "center-normalize"),
}


def profile_spec(profile, n, k, m, seed=0):
    """Expand a named profile into a :class:`SyntheticSpec`."""
    if profile not in PROFILES:
        raise InputError(f"unknown profile {profile!r}; choose from {sorted(PROFILES)}")
    variant, views, prep = PROFILES[profile]
    spec = SyntheticSpec(n=int(n), k=int(k), m=int(m), seed=int(seed), variant=variant,
                         preprocess=prep, profile=profile)
    if views is not None:
        spec.views = views(spec.n, spec.k, spec.m)
    else:
        spec.blob = dict(BLOB_DEFAULTS)
    return spec.validate()


def balanced_labels(n, k, rng):
    labels = np.arange(n) % k
    rng.shuffle(labels)
    return labels


def projector_views(spec):
    """(labels, H_true, feature matrices) of a projector-variant spec."""
    rng = np.random.default_rng(spec.seed)
    labels = balanced_labels(spec.n, spec.k, rng)
    H = indicator_partition(labels, spec.k)
    U_list = [make_noisy_view(H, int(v.get("n_extra", 0)), v.get("tilt_angles", ()),
                              seed=[spec.seed, p])
              for p, v in enumerate(spec.views)]
    return labels, H, U_list


def blob_features(spec):
    """(labels, per-view feature arrays) of an rbf-blobs spec."""
    cfg = {**BLOB_DEFAULTS, **spec.blob}
    n, k = spec.n, spec.k
    rng = np.random.default_rng(spec.seed)
    labels = balanced_labels(n, k, rng)
    centers = rng.standard_normal((k, k)) * cfg["signal_scale"]
    Z = centers[labels] + cfg["shared_noise"] * rng.standard_normal((n, k))
    views = []
    for _ in range(spec.m):
        A = rng.standard_normal((k, k))
        groups = rng.integers(0, k, n)
        nuisance = rng.standard_normal((k, k - 1)) * cfg["nuisance_scale"]
        X = np.hstack([
            Z @ A,
            nuisance[groups] + cfg["nuisance_jitter"] * rng.standard_normal((n, k - 1)),
            cfg["isotropic_scale"] * rng.standard_normal((n, int(cfg["isotropic_dims"]))),
        ])
        views.append(X)
    return labels, views


def median_gamma(X):
    return float(1.0 / np.median(pdist(X, "sqeuclidean")))


def synthesize(spec):
    """Labels and kernels of a spec, in memory."""
    spec.validate()
    if spec.variant == "projector":
        labels, _, U_list = projector_views(spec)
        kernels_ = [U @ U.T for U in U_list]
        kernels_ = [0.5 * (K + K.T) for K in kernels_]
    else:
        labels, views = blob_features(spec)
        kernels_ = [build_kernel(X, "rbf", gamma=median_gamma(X)) for X in views]
    return labels, kernels_


def generate_synthetic(spec, out_dir, fmt="mkck"):
    """Write ``view_XX.<fmt>``, ``labels.txt`` and the manifest; return the directory."""
    if isinstance(spec, dict):
        spec = SyntheticSpec.from_dict(spec)
    if fmt not in ("mkck", "csv"):
        raise InputError(f"format must be mkck or csv, got {fmt!r}")
    labels, kernels_ = synthesize(spec)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    width = max(2, len(str(spec.m - 1)))
    for p, K in enumerate(kernels_):
        save_kernel(K, out / f"view_{p:0{width}d}.{fmt}")
    save_labels(labels, out / "labels.txt")
    (out / MANIFEST).write_text(json.dumps(spec.to_dict(), indent=2, sort_keys=True) + "\n")
    return out


def load_manifest(path):
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read manifest {path}: {exc}") from None
    return SyntheticSpec.from_dict(data)
