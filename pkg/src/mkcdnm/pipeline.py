"""End-to-end runs over a dataset directory and their JSON reports.

A dataset directory holds ``view_*.mkck`` or ``view_*.csv`` kernel files,
an optional 1-based ``labels.txt`` and an optional ``manifest.json`` written
by :mod:`mkcdnm.synth`.  Views are taken in lexicographic filename order.
"""
from __future__ import annotations

import contextlib
import json
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import kernels, synth
from .errors import InputError, MKCError
from .fusion import consensus_partition
from .metrics import evaluate, restart_summary
from .noise import (DENOISE_MODES, alignment_matrix, check_lemma1, check_lemma2, check_lemma3,
                    check_theorem2, decompose_noise, denoise_kernel, indicator_partition)
from .optimizer import OptimizerConfig, run_algorithm1
from .spectral import average_kernel, kernel_kmeans, symmetric_eig, truncate_features

log = logging.getLogger(__name__)

MODES = ("dnm", "akkm", "kkm-per-view", "decompose", "synth")
DEFAULT_PREPROCESS = "center-normalize"


@dataclass
class RunConfig:
    dataset_dir: str
    k: int
    restarts: int = 50
    seed: int = 0
    initial_M: float = 0.5
    max_outer_iters: int = 200
    mode: str = "dnm"
    threads: int | None = None
    preprocess: str | None = None     # None: manifest value, else center-normalize
    features: str = "learned"         # decompose: learned d or full numerical rank
    reference: str = "auto"           # decompose: labels, consensus, or labels when present
    heatmaps: bool = False
    curves: bool = False
    timings: bool = True
    synth: dict = field(default_factory=dict)   # mode=synth: profile, n, m

    def validate(self):
        if self.mode not in MODES:
            raise InputError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.k < 2:
            raise InputError("k must be >= 2")
        if self.restarts < 1:
            raise InputError("restarts must be >= 1")
        if self.threads is not None and self.threads < 1:
            raise InputError("threads must be >= 1")
        if self.features not in ("learned", "rank"):
            raise InputError("features must be 'learned' or 'rank'")
        if self.reference not in ("auto", "labels", "consensus"):
            raise InputError("reference must be 'auto', 'labels' or 'consensus'")
        if self.preprocess is not None and self.preprocess not in kernels.PREPROCESSORS:
            raise InputError(f"unknown preprocessing {self.preprocess!r}")
        OptimizerConfig.from_dict({"initial_M": self.initial_M,
                                   "max_outer_iters": self.max_outer_iters})
        return self


@contextlib.contextmanager
def stage(name, view=None):
    """Tag errors raised inside the block with the stage name and view index."""
    try:
        yield
    except MKCError as exc:
        if getattr(exc, "stage", None) is None:
            exc.stage = name
            exc.view_index = view
            where = name if view is None else f"{name}, view {view}"
            exc.args = (f"[{where}] {exc.args[0] if exc.args else ''}",) + exc.args[1:]
        raise


class Timer:
    def __init__(self):
        self.stages = {}

    @contextlib.contextmanager
    def __call__(self, name, view=None):
        t0 = time.perf_counter()
        with stage(name, view):
            yield
        self.stages[name] = self.stages.get(name, 0.0) + time.perf_counter() - t0


@dataclass
class Dataset:
    paths: list
    kernels: list
    labels: np.ndarray | None
    manifest: dict | None

    @property
    def n(self):
        return self.kernels[0].shape[0]


def discover(dataset_dir):
    root = Path(dataset_dir)
    if not root.is_dir():
        raise InputError(f"dataset directory {root} does not exist")
    paths = sorted(list(root.glob("view_*.mkck")) + list(root.glob("view_*.csv")),
                   key=lambda p: p.name)
    if not paths:
        raise InputError(f"no view_*.mkck or view_*.csv files in {root}")
    return paths


def load_dataset(dataset_dir):
    paths = discover(dataset_dir)
    root = Path(dataset_dir)
    mats = []
    for p, path in enumerate(paths):
        with stage("load", p):
            mats.append(kernels.load_kernel(path))
    with stage("load"):
        n = {K.shape[0] for K in mats}
        if len(n) != 1:
            raise InputError(f"kernels disagree on sample count: {sorted(n)}")
        labels = None
        if (root / "labels.txt").exists():
            labels = kernels.load_labels(root / "labels.txt")
            if labels.size != mats[0].shape[0]:
                raise InputError(f"labels.txt has {labels.size} entries, kernels have n={mats[0].shape[0]}")
        manifest = None
        if (root / synth.MANIFEST).exists():
            try:
                manifest = json.loads((root / synth.MANIFEST).read_text())
            except json.JSONDecodeError as exc:
                raise InputError(f"malformed {synth.MANIFEST}: {exc}") from None
    return Dataset(paths, mats, labels, manifest)


def _pool_map(fn, items, threads, name):
    workers = threads or os.cpu_count() or 1

    def run(args):
        p, item = args
        with stage(name, p):
            return fn(item)

    if workers == 1 or len(items) == 1:
        return [run(a) for a in enumerate(items)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, enumerate(items)))


def _metrics(pred, truth, all_labels):
    if truth is None:
        return None
    return {"best": evaluate(pred, truth).to_dict(),
            "restarts": restart_summary(all_labels, truth)}


def denoise_ladder(U_list, H, truth, k, restarts=50, seed=0, backend=None):
    """Kernel k-means scores on the view-averaged kernel for every denoising mode."""
    out = {}
    for mode in DENOISE_MODES:
        K = average_kernel([denoise_kernel(U, H, mode) for U in U_list])
        res = kernel_kmeans(K, k, restarts, seed, strict=False, backend=backend)
        out[mode] = evaluate(res.labels, truth).to_dict()
    return out


class Runner:
    """Shared state of one run: prepared kernels, eigensystems and timings."""

    def __init__(self, config, dataset=None):
        self.config = config.validate()
        self.timer = Timer()
        if dataset is None:
            with self.timer("load"):
                dataset = load_dataset(config.dataset_dir)
        self.data = dataset
        manifest_prep = (dataset.manifest or {}).get("preprocess")
        self.preprocess = config.preprocess or manifest_prep or DEFAULT_PREPROCESS
        self._prepared = None
        self._eig = None

    @property
    def prepared(self):
        if self._prepared is None:
            with self.timer("preprocess"):
                self._prepared = _pool_map(lambda K: kernels.preprocess(K, self.preprocess),
                                           self.data.kernels, self.config.threads, "preprocess")
        return self._prepared

    @property
    def eig(self):
        if self._eig is None:
            prepared = self.prepared
            with self.timer("eig"):
                self._eig = _pool_map(symmetric_eig, prepared, self.config.threads, "eig")
        return self._eig

    def header(self, mode):
        c = self.config
        return {
            "mode": mode,
            "dataset": {"n": self.data.n, "m": len(self.data.kernels),
                        "views": [p.name for p in self.data.paths],
                        "has_labels": self.data.labels is not None,
                        "preprocess": self.preprocess},
            "config": {"k": c.k, "restarts": c.restarts, "seed": c.seed,
                       "initial_M": c.initial_M, "max_outer_iters": c.max_outer_iters},
        }

    def optimize(self):
        es = self.eig
        cfg = OptimizerConfig(self.config.initial_M, self.config.max_outer_iters)
        with self.timer("optimize"):
            return run_algorithm1(es, self.config.k, cfg)

    def dnm(self):
        c = self.config
        opt = self.optimize()
        with self.timer("consensus"):
            cons = consensus_partition(opt.features, c.k, c.restarts, c.seed)
        with self.timer("metrics"):
            metrics = _metrics(cons.labels, self.data.labels, cons.kmeans.all_labels)
        trace = opt.trace
        result = {
            "d": opt.state.d.tolist(),
            "labels": cons.labels.tolist(),
            "objective": {"kmeans_inertia": cons.kmeans.inertia,
                          "dimension_sum": int(opt.state.d.sum()),
                          "consensus_spectrum": cons.spectrum[: 2 * c.k].tolist()},
            "optimizer": {"initial_dimension": trace.initial_dimension,
                          "sweeps": len(trace.records),
                          "final_M": opt.state.M,
                          "G": [r.G_after_d_hat for r in trace.records],
                          "trace": [asdict(r) for r in trace.records]},
            "metrics": metrics,
        }
        if c.curves and self.data.labels is not None:
            with self.timer("curves"):
                result["curves"] = self._curves(trace)
        return result

    def _curves(self, trace):
        # metric value of the consensus built from each sweep's d
        c = self.config
        rows = []
        for rec in trace.records:
            feats = [truncate_features(es, dp) for es, dp in zip(self.eig, rec.d)]
            cons = consensus_partition(feats, c.k, c.restarts, c.seed)
            rows.append({"iteration": rec.iteration, "d": rec.d,
                         **evaluate(cons.labels, self.data.labels).to_dict()})
        for row in rows:
            row.pop("confusion")
        return rows

    def akkm(self):
        c = self.config
        prepared = self.prepared
        with self.timer("akkm"):
            res = kernel_kmeans(average_kernel(prepared), c.k, c.restarts, c.seed)
        with self.timer("metrics"):
            metrics = _metrics(res.labels, self.data.labels, res.kmeans.all_labels)
        return {"labels": res.labels.tolist(),
                "objective": {"kernel_kmeans": res.objective, "kmeans_inertia": res.kmeans.inertia},
                "metrics": metrics}

    def kkm_per_view(self):
        c = self.config
        views = []
        for p, K in enumerate(self.prepared):
            with self.timer("kkm", p):
                res = kernel_kmeans(K, c.k, c.restarts, c.seed, eig=self.eig[p])
            views.append({"view": p, "objective": res.objective,
                          "metrics": _metrics(res.labels, self.data.labels, res.kmeans.all_labels)})
        return {"views": views}

    def decompose(self):
        c = self.config
        if c.features == "learned":
            opt = self.optimize()
            feats, d = opt.features, opt.state.d.tolist()
        else:
            feats = [truncate_features(es, es.rank) for es in self.eig]
            d = [U.shape[1] for U in feats]
        with self.timer("reference"):
            reference = c.reference
            if reference == "auto":
                reference = "labels" if self.data.labels is not None else "consensus"
            if reference == "labels":
                if self.data.labels is None:
                    raise InputError("reference 'labels' needs a labels.txt in the dataset")
                H = indicator_partition(self.data.labels)
            else:
                H = consensus_partition(feats, c.k, c.restarts, c.seed).H
        views, decs = [], []
        with self.timer("decompose"):
            for p, U in enumerate(feats):
                with stage("decompose", p):
                    dec = decompose_noise(U, H)
                tr_E, tr_N, tr_C = dec.traces
                min_n, max_c = check_lemma3(dec)
                row = {"view": p, "d": int(U.shape[1]), "tr_E": tr_E, "tr_N": tr_N, "tr_C": tr_C,
                       "tr_R": dec.tr_R, "min_eig_N": min_n, "max_eig_C": max_c,
                       "lemma1_residual": check_lemma1(dec, H),
                       "lemma2_residual": check_lemma2(dec, H)}
                if c.heatmaps:
                    row["heatmaps"] = {"E": dec.E.tolist(), "E_N": dec.E_N.tolist(),
                                       "E_C": dec.E_C.tolist(), "R": dec.R.tolist()}
                views.append(row)
                decs.append(dec)
        result = {"reference": reference, "d": d, "views": views,
                  "alignment": alignment_matrix(feats).tolist(),
                  "trace_identity_residual": check_theorem2(decs, d, H.shape[1])}
        if self.data.labels is not None:
            with self.timer("denoise"):
                result["denoise"] = denoise_ladder(feats, H, self.data.labels, c.k,
                                                   c.restarts, c.seed)
        return result

    def report(self, mode, result):
        out = self.header(mode)
        out["result"] = result
        if self.config.timings:
            out["timings"] = dict(self.timer.stages)
        return out


def run_pipeline(config, dataset=None):
    """Run ``config.mode`` and return the report as a plain dict."""
    config.validate()
    if config.mode == "synth":
        return _run_synth(config)
    runner = Runner(config, dataset)
    result = {"dnm": runner.dnm, "akkm": runner.akkm, "kkm-per-view": runner.kkm_per_view,
              "decompose": runner.decompose}[config.mode]()
    return runner.report(config.mode, result)


def _run_synth(config):
    opts = dict(config.synth)
    profile = opts.pop("profile", "rbf-blobs")
    n = opts.pop("n", 300)
    m = opts.pop("m", 3)
    if opts:
        raise InputError(f"unknown synth options: {sorted(opts)}")
    with stage("synth"):
        spec = synth.profile_spec(profile, n, config.k, m, config.seed)
        synth.generate_synthetic(spec, config.dataset_dir)
    runner = Runner(config)
    result = {"spec": spec.to_dict(), "dnm": runner.dnm(), "akkm": runner.akkm()}
    return runner.report("synth", result)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(report):
    """Serialize a report; floats use the shortest repr that round-trips exactly."""
    return json.dumps(_jsonable(report), indent=2, allow_nan=False) + "\n"


def write_report(report, path):
    text = dumps(report)
    if path is None or str(path) == "-":
        return text
    Path(path).write_text(text)
    return text
