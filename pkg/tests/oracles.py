"""Independent reference computations used as test oracles.

Nothing here calls into the code paths it checks, apart from taking the
eigenbases as input.
"""
import itertools
import math

import numpy as np


def exhaustive_dimensions(eig_systems, k, tol=1e-8):
    """Brute-force minimiser of sum(d) under every pairwise alignment constraint.

    Returns (best_sum, optimal_d_list); (None, []) when nothing is feasible.
    """
    ranks = [es.rank for es in eig_systems]
    m = len(eig_systems)

    def align(p, dp, q, dq):
        A = eig_systems[p].eigenvectors[:, :dp]
        B = eig_systems[q].eigenvectors[:, :dq]
        return float(np.linalg.norm(A.T @ B, "fro") ** 2)

    memo = {}
    best, argbest = None, []
    for d in itertools.product(*[range(k, r + 1) for r in ranks]):
        total = sum(d)
        if best is not None and total > best:
            continue
        ok = True
        for p in range(m):
            for q in range(m):
                key = (p, d[p], q, d[q])
                if key not in memo:
                    memo[key] = align(*key)
                if memo[key] < k - tol:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            if best is None or total < best:
                best, argbest = total, [d]
            else:
                argbest.append(d)
    return best, argbest


def brute_force_accuracy(pred, truth):
    """Best fraction of agreement over all injective relabelings of pred."""
    pred = list(pred)
    truth = list(truth)
    ps = sorted(set(pred))
    ts = sorted(set(truth))
    n = len(pred)
    best = 0
    targets = ts + [None] * max(0, len(ps) - len(ts))
    for perm in itertools.permutations(targets, len(ps)):
        mapping = dict(zip(ps, perm))
        hits = sum(1 for a, b in zip(pred, truth) if mapping[a] == b)
        best = max(best, hits)
    return best / n


def pair_counting_ari(pred, truth):
    """ARI from the raw pair-agreement table over all C(n, 2) pairs."""
    n = len(pred)
    a = b = c = d = 0
    for i, j in itertools.combinations(range(n), 2):
        same_p = pred[i] == pred[j]
        same_t = truth[i] == truth[j]
        if same_p and same_t:
            a += 1
        elif same_p:
            b += 1
        elif same_t:
            c += 1
        else:
            d += 1
    total = a + b + c + d
    expected = (a + b) * (a + c) / total if total else 0.0
    maximum = ((a + b) + (a + c)) / 2
    if maximum == expected:
        return 1.0 if (b == 0 and c == 0) else 0.0
    return (a - expected) / (maximum - expected)


def definitional_nmi(pred, truth):
    """Mutual information over joint frequencies, geometric normalisation."""
    n = len(pred)
    ps, ts = sorted(set(pred)), sorted(set(truth))
    px = {x: sum(1 for v in pred if v == x) / n for x in ps}
    py = {y: sum(1 for v in truth if v == y) / n for y in ts}
    mi = 0.0
    for x in ps:
        for y in ts:
            pxy = sum(1 for a, b in zip(pred, truth) if a == x and b == y) / n
            if pxy > 0:
                mi += pxy * math.log(pxy / (px[x] * py[y]))
    hx = -sum(v * math.log(v) for v in px.values())
    hy = -sum(v * math.log(v) for v in py.values())
    if hx == 0 or hy == 0:
        same = all((pred[i] == pred[j]) == (truth[i] == truth[j])
                   for i in range(n) for j in range(n))
        return 1.0 if same else 0.0
    return mi / math.sqrt(hx * hy)


def overlap_purity(pred, truth):
    n = len(pred)
    total = 0
    for c in set(pred):
        members = [t for p, t in zip(pred, truth) if p == c]
        total += max(members.count(t) for t in set(members))
    return total / n
