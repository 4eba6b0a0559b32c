"""Parameter-free selection of per-view feature dimensions.

The target problem is

    min_d  sum_p d_p   s.t.  ||U_p(d_p)^T U_q(d_q)||_F^2 >= k   for all p, q

where ``U_p(d)`` is the leading-``d`` eigenbasis of view ``p``.  It is
relaxed with a second copy ``d_hat`` of the dimensions and a quadratic
coupling penalty of weight ``M``:

    G_M(d, d_hat) = 1/2 (d + d_hat)^T 1 + M/2 ||d - d_hat||^2

and solved by exact block-coordinate steps on ``d`` and ``d_hat``,
doubling ``M`` after every sweep that ends with ``d != d_hat``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict
from typing import NamedTuple

import numpy as np

from .errors import InfeasibleError, InputError, NonConvergenceError, RankError
from .spectral import truncate_features


@dataclass
class OptimizerConfig:
    initial_M: float = 0.5
    max_outer_iters: int = 200
    alignment_tolerance: float = 1e-8

    @classmethod
    def from_dict(cls, data):
        unknown = set(data) - {"initial_M", "max_outer_iters", "alignment_tolerance"}
        if unknown:
            raise InputError(f"unknown optimizer config keys: {sorted(unknown)}")
        cfg = cls(**data)
        if not cfg.initial_M > 0:
            raise InputError("initial_M must be positive")
        if cfg.max_outer_iters < 1:
            raise InputError("max_outer_iters must be >= 1")
        return cfg


@dataclass
class DimensionState:
    d: np.ndarray
    d_hat: np.ndarray
    M: float
    iteration: int = 0

    def copy(self):
        return DimensionState(self.d.copy(), self.d_hat.copy(), self.M, self.iteration)


@dataclass
class TraceRecord:
    iteration: int
    M: float
    d: list
    d_hat: list
    G_start: float          # G_M at the sweep's starting point
    G_after_d: float
    G_after_d_hat: float
    feasible_after_d: bool
    feasible_after_d_hat: bool


@dataclass
class OptimizerTrace:
    records: list = field(default_factory=list)
    initial_dimension: int = 0

    def to_dict(self):
        return {"initial_dimension": self.initial_dimension,
                "records": [asdict(r) for r in self.records]}


class OptimizerResult(NamedTuple):
    state: DimensionState
    features: list
    trace: OptimizerTrace


def objective(d, d_hat, M):
    """G_M(d, d_hat)."""
    d = np.asarray(d, dtype=np.float64)
    d_hat = np.asarray(d_hat, dtype=np.float64)
    return float(0.5 * (d + d_hat).sum() + 0.5 * M * np.sum((d - d_hat) ** 2))


def alignment(U, V):
    """``||U^T V||_F^2``; lies in ``[0, min(d_U, d_V)]`` for orthonormal inputs."""
    U = np.asarray(U)
    V = np.asarray(V)
    if U.shape[0] != V.shape[0]:
        raise InputError("feature matrices must share the row count")
    return float(np.sum((U.T @ V) ** 2))


def solve_coordinate(d_hat_p, d_min, d_max, M):
    """Integer minimiser of ``1/2 (d + d_hat) + M/2 (d - d_hat)^2`` on [d_min, d_max].

    Ties go to the smaller dimension.
    """
    if d_min > d_max:
        raise InputError(f"empty range [{d_min}, {d_max}]")
    if not M > 0:
        raise InputError("M must be positive")
    star = d_hat_p - 1.0 / (2.0 * M)
    best = None
    for c in sorted({min(max(math.floor(star), d_min), d_max),
                     min(max(math.ceil(star), d_min), d_max)}):
        f = 0.5 * (c + d_hat_p) + 0.5 * M * (c - d_hat_p) ** 2
        if best is None or f < best[1]:
            best = (c, f)
    return int(best[0])


class AlignmentCache:
    """Lazily grown table of ``(u_{p,i} . u_{q,j})^2`` for every view pair.

    ``value(p, d, q, e)`` returns ``alignment(U_p(d), U_q(e))`` through 2-d
    prefix sums.  Blocks are computed on demand and grown geometrically, so
    the work is proportional to the dimensions actually probed, not the rank.
    """

    def __init__(self, eig_systems, ranks=None):
        self.vecs = [es.eigenvectors for es in eig_systems]
        self.ranks = [es.rank for es in eig_systems] if ranks is None else list(ranks)
        n = {V.shape[0] for V in self.vecs}
        if len(n) != 1:
            raise InputError(f"views disagree on sample count: {sorted(n)}")
        self._sq = {}
        self._prefix = {}

    def value(self, p, d, q, e):
        if p == q:
            # orthonormal prefixes of one basis: exact
            return float(min(d, e))
        if p > q:
            p, q, d, e = q, p, e, d
        S = self._prefix.get((p, q))
        if S is None or d > S.shape[0] - 1 or e > S.shape[1] - 1:
            S = self._grow(p, q, d, e)
        return float(S[d, e])

    def _grow(self, p, q, d, e):
        sq = self._sq.get((p, q), np.zeros((0, 0)))
        a, b = sq.shape
        rp, rq = self.ranks[p], self.ranks[q]
        na = min(max(d, 2 * a), rp) if d > a else a
        nb = min(max(e, 2 * b), rq) if e > b else b
        Up, Uq = self.vecs[p], self.vecs[q]
        new = np.zeros((na, nb))
        new[:a, :b] = sq
        if nb > b and a:
            new[:a, b:nb] = (Up[:, :a].T @ Uq[:, b:nb]) ** 2
        if na > a:
            new[a:na, :nb] = (Up[:, a:na].T @ Uq[:, :nb]) ** 2
        self._sq[(p, q)] = new
        S = np.zeros((na + 1, nb + 1))
        S[1:, 1:] = new.cumsum(axis=0).cumsum(axis=1)
        self._prefix[(p, q)] = S
        return S


def _search_min(feasible, lo, hi):
    """Smallest x in [lo, hi] with feasible(x), assuming monotone feasibility.

    Exponential bracketing from ``lo`` followed by bisection, so the largest
    point probed is at most about twice the answer.  Returns None when even
    ``hi`` is infeasible.
    """
    if feasible(lo):
        return lo
    bad, step = lo, 1
    while True:
        good = min(lo + step, hi)
        if feasible(good):
            break
        if good == hi:
            return None
        bad, step = good, 2 * step
    while good - bad > 1:
        mid = (bad + good) // 2
        if feasible(mid):
            good = mid
        else:
            bad = mid
    return good


def _cached_min_dim(cache, p, partners, k, d_max, tol=1e-8):
    # partners: (q, e) pairs of partner view and its current dimension
    if not partners:
        raise InputError("need at least one partner")
    if d_max < k:
        raise RankError(f"view {p}: rank {d_max} is below k={k}", max_feasible=d_max)

    def ok(d):
        return all(cache.value(p, d, q, e) >= k - tol for q, e in partners)

    d = _search_min(ok, k, d_max)
    if d is None:
        bad = [q for q, e in partners if cache.value(p, d_max, q, e) < k - tol]
        raise InfeasibleError(
            f"view {p} cannot reach alignment {k} with view {bad[0]} even at d={d_max}",
            view=p, partner=bad[0])
    return d


def min_feasible_dim(es_p, partners, k, d_max, tol=1e-8):
    """Smallest d in [k, d_max] with alignment(U_p(d), V) >= k for every partner V.

    Alignment is non-decreasing in ``d`` because truncations are column
    prefixes, which makes the bracketing search exact.
    """
    if not partners:
        raise InputError("need at least one partner")
    if d_max < k:
        raise RankError(f"rank {d_max} is below k={k}", max_feasible=d_max)
    U = es_p.eigenvectors
    cum = {}

    def ok(d):
        for i, V in enumerate(partners):
            if (i, d) not in cum:
                cum[i, d] = alignment(U[:, :d], V)
            if cum[i, d] < k - tol:
                return False
        return True

    d = _search_min(ok, k, d_max)
    if d is None:
        bad = next(i for i, V in enumerate(partners) if alignment(U[:, :d_max], V) < k - tol)
        raise InfeasibleError(f"partner {bad} cannot be matched even at d={d_max}", partner=bad)
    return d


class DimensionProblem:
    """Views, their ranks and the shared alignment cache for one run."""

    def __init__(self, eig_systems, k, tol=1e-8):
        if not eig_systems:
            raise InputError("need at least one view")
        self.eig_systems = list(eig_systems)
        self.k = int(k)
        self.tol = tol
        self.ranks = np.array([es.rank for es in self.eig_systems])
        self.m = len(self.eig_systems)
        if self.k < 1:
            raise InputError("k must be positive")
        low = int(np.argmin(self.ranks))
        if self.ranks[low] < self.k:
            raise RankError(f"view {low} has numerical rank {self.ranks[low]} < k={self.k}",
                            max_feasible=int(self.ranks[low]))
        self.cache = AlignmentCache(self.eig_systems, self.ranks)

    def align(self, p, d, q, e):
        return self.cache.value(p, int(d), q, int(e))

    def feasible(self, d, d_hat):
        """Every cross constraint alignment(U_p(d_p), U_q(d_hat_q)) >= k."""
        return all(self.align(p, d[p], q, d_hat[q]) >= self.k - self.tol
                   for p in range(self.m) for q in range(self.m))

    def uniform_start(self):
        """Smallest c such that the all-c vector is feasible."""
        top = int(self.ranks.min())
        c = _search_min(lambda c: self.feasible([c] * self.m, [c] * self.m), self.k, top)
        if c is None:
            for p in range(self.m):
                for q in range(self.m):
                    if self.align(p, top, q, top) < self.k - self.tol:
                        raise InfeasibleError(
                            f"views {p} and {q} cannot be aligned to {self.k} at the largest "
                            f"common dimension {top}", view=p, partner=q)
        return c

    def min_dim(self, p, counterpart):
        partners = [(q, int(counterpart[q])) for q in range(self.m)]
        return _cached_min_dim(self.cache, p, partners, self.k, int(self.ranks[p]), self.tol)


def _as_problem(eig_systems, k):
    if isinstance(eig_systems, DimensionProblem):
        return eig_systems
    return DimensionProblem(eig_systems, k)


def update_d(state, eig_systems, k=None):
    """Exact minimisation of G_M over d with d_hat fixed; coordinates are independent.

    ``eig_systems`` may be a prepared :class:`DimensionProblem`, which keeps
    its alignment cache across calls.
    """
    problem = _as_problem(eig_systems, k)
    new = state.d.copy()
    for p in range(problem.m):
        lo = problem.min_dim(p, state.d_hat)
        new[p] = solve_coordinate(int(state.d_hat[p]), lo, int(problem.ranks[p]), state.M)
    return DimensionState(new, state.d_hat.copy(), state.M, state.iteration)


def update_d_hat(state, eig_systems, k=None):
    """Exact minimisation of G_M over d_hat with d fixed."""
    problem = _as_problem(eig_systems, k)
    new = state.d_hat.copy()
    for p in range(problem.m):
        lo = problem.min_dim(p, state.d)
        new[p] = solve_coordinate(int(state.d[p]), lo, int(problem.ranks[p]), state.M)
    return DimensionState(state.d.copy(), new, state.M, state.iteration)


def run_algorithm1(eig_systems, k, config=None):
    """Alternate d / d_hat updates, doubling M until the two copies agree.

    Returns the final :class:`DimensionState`, the truncated feature
    matrices ``U_p(d_p)`` and the per-sweep trace.
    """
    if config is None:
        config = OptimizerConfig()
    elif isinstance(config, dict):
        config = OptimizerConfig.from_dict(config)
    problem = DimensionProblem(eig_systems, k, config.alignment_tolerance)

    c = problem.uniform_start()
    start = np.full(problem.m, c, dtype=np.int64)
    state = DimensionState(start, start.copy(), float(config.initial_M))
    trace = OptimizerTrace(initial_dimension=int(c))

    for it in range(config.max_outer_iters):
        state.iteration = it
        g0 = objective(state.d, state.d_hat, state.M)
        state = update_d(state, problem)
        g1 = objective(state.d, state.d_hat, state.M)
        f1 = problem.feasible(state.d, state.d_hat)
        state = update_d_hat(state, problem)
        g2 = objective(state.d, state.d_hat, state.M)
        f2 = problem.feasible(state.d, state.d_hat)
        trace.records.append(TraceRecord(it, state.M, state.d.tolist(), state.d_hat.tolist(),
                                         g0, g1, g2, f1, f2))
        if np.array_equal(state.d, state.d_hat):
            feats = [truncate_features(es, int(dp)) for es, dp in zip(problem.eig_systems, state.d)]
            return OptimizerResult(state, feats, trace)
        state.M *= 2.0

    raise NonConvergenceError(
        f"d and d_hat still differ after {config.max_outer_iters} M-doublings", trace=trace)
