"""Supervised clustering scores: ACC, NMI, purity and ARI.

All scores accept arbitrary integer cluster ids and are invariant to
relabelling either argument.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.special import comb

from .errors import InputError


def contingency(pred, truth):
    """Counts table with one row per predicted and one column per true cluster."""
    pred = np.asarray(pred).ravel()
    truth = np.asarray(truth).ravel()
    if pred.shape != truth.shape:
        raise InputError(f"label vectors differ in length: {pred.size} vs {truth.size}")
    if pred.size == 0:
        raise InputError("empty label vectors")
    _, pi = np.unique(pred, return_inverse=True)
    _, ti = np.unique(truth, return_inverse=True)
    C = np.zeros((pi.max() + 1, ti.max() + 1), dtype=np.int64)
    np.add.at(C, (pi, ti), 1)
    return C


def _same_partition(C):
    return bool(np.all((C > 0).sum(axis=0) == 1) and np.all((C > 0).sum(axis=1) == 1))


def accuracy(pred, truth):
    C = contingency(pred, truth)
    rows, cols = linear_sum_assignment(C, maximize=True)
    return float(C[rows, cols].sum() / C.sum())


def nmi(pred, truth):
    """Mutual information over sqrt(H(pred) H(truth)), natural log."""
    C = contingency(pred, truth).astype(np.float64)
    n = C.sum()
    P = C / n
    a = P.sum(axis=1)
    b = P.sum(axis=0)
    ha = -np.sum(a * np.log(a))
    hb = -np.sum(b * np.log(b))
    if ha == 0.0 or hb == 0.0:
        return 1.0 if _same_partition(C) else 0.0
    nz = P > 0
    mi = np.sum(P[nz] * np.log(P[nz] / np.outer(a, b)[nz]))
    return float(min(max(mi / np.sqrt(ha * hb), 0.0), 1.0))


def purity(pred, truth):
    C = contingency(pred, truth)
    return float(C.max(axis=1).sum() / C.sum())


def ari(pred, truth):
    """Hubert-Arabie adjusted Rand index."""
    C = contingency(pred, truth)
    n = C.sum()
    index = comb(C, 2).sum()
    sa = comb(C.sum(axis=1), 2).sum()
    sb = comb(C.sum(axis=0), 2).sum()
    expected = sa * sb / comb(n, 2) if n > 1 else 0.0
    maximum = 0.5 * (sa + sb)
    if maximum == expected:
        return 1.0 if _same_partition(C) else 0.0
    return float((index - expected) / (maximum - expected))


@dataclass
class ClusteringReport:
    acc: float
    nmi: float
    purity: float
    ari: float
    confusion: list

    def to_dict(self):
        return asdict(self)


def evaluate(pred, truth):
    return ClusteringReport(accuracy(pred, truth), nmi(pred, truth), purity(pred, truth),
                            ari(pred, truth), contingency(pred, truth).tolist())


def restart_summary(all_labels, truth):
    """Mean and standard deviation of every score across k-means restarts."""
    scores = {name: [] for name in ("acc", "nmi", "purity", "ari")}
    for labels in all_labels:
        scores["acc"].append(accuracy(labels, truth))
        scores["nmi"].append(nmi(labels, truth))
        scores["purity"].append(purity(labels, truth))
        scores["ari"].append(ari(labels, truth))
    return {name: {"mean": float(np.mean(v)), "std": float(np.std(v))} for name, v in scores.items()}
