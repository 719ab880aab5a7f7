"""Exact Lloyd iterations with pluggable assignment accelerators.

Each accelerator keeps triangle-inequality bookkeeping that lets it skip
distance evaluations, but the assignment it produces is the same as a full
scan with lowest-index tie breaking, so the whole trajectory (centroids,
iteration count, final SSE) matches the naive run bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import _kernels as K
from .core import CHUNK, Configuration, Dataset, DistanceLedger, chunks, run_chunked

DEFAULT_MAX_ITER = 1000

# Skip tests compare ``u * SAFE + tol < l``: a strict margin keeps rounding
# in the accumulated drift from ever licensing a wrong skip.
SAFE = 1.0 + 1e-10
REL_TOL = 1e-10


class AcceleratorKind(str, Enum):
    NAIVE = "naive"
    RC = "rc"
    ELK = "elk"
    HAM = "ham"
    YY = "yy"
    EXP = "exp"

    @classmethod
    def parse(cls, value) -> "AcceleratorKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            names = ", ".join(m.value for m in cls)
            raise ValueError(f"unknown accelerator {value!r} (expected one of {names})") from None


@dataclass
class LloydOutcome:
    config: Configuration
    iterations: int
    converged: bool
    sse_history: list = field(default_factory=list)

    @property
    def sse(self) -> float:
        return self.sse_history[-1]


def update_centroids(data: Dataset, assignment, sizes) -> np.ndarray:
    """Barycentre of each cluster. Uses no distance evaluations."""
    sizes = np.asarray(sizes)
    if np.any(sizes < 1):
        raise ValueError("empty cluster reached the centroid update")
    X = data.points
    assignment = np.ascontiguousarray(assignment, dtype=np.int64)
    k = sizes.shape[0]
    total = np.zeros((k, X.shape[1]))
    for lo, hi in chunks(X.shape[0]):
        total += K.centroid_sums(X, assignment, k, lo, hi)
    return total / sizes[:, None]


def repair_empty(assignment, sizes, costs) -> list:
    """Move the worst-fitting point into each empty cluster, lowest empty index first.

    The donor is the point with the largest squared distance to its own
    centroid among clusters holding at least two points (lowest index on
    ties). Mutates the arrays in place and returns the moved point indices.
    """
    moved = []
    for e in np.flatnonzero(sizes == 0):
        cand = np.where(sizes[assignment] > 1, costs, -1.0)
        i = int(np.argmax(cand))
        old = assignment[i]
        assignment[i] = e
        sizes[old] -= 1
        sizes[e] += 1
        costs[i] = 0.0
        moved.append(i)
    return moved


def _diameter(X: np.ndarray) -> float:
    span = X.max(axis=0) - X.min(axis=0)
    return float(np.sqrt(np.sum(span * span)))


class _Strategy:
    exact_costs = False

    def __init__(self, X, k, threads, tol):
        self.X = X
        self.k = k
        self.n = X.shape[0]
        self.threads = threads
        self.tol = tol

    def _chunked(self, fn):
        return run_chunked(fn, self.n, self.threads)

    def first(self, C, assignment, costs):
        raise NotImplementedError

    def step(self, C_prev, C, assignment, costs):
        raise NotImplementedError

    def reset(self, points):
        pass

    def check_bounds(self, C, assignment, dist):
        pass


class _Naive(_Strategy):
    exact_costs = True

    def first(self, C, assignment, costs):
        return self._chunked(lambda lo, hi: K.assign_block(self.X, C, lo, hi, assignment, costs))

    def step(self, C_prev, C, assignment, costs):
        return self.first(C, assignment, costs)

    def check_bounds(self, C, assignment, dist):
        pass


class _ReducedComputation(_Strategy):
    exact_costs = True

    def __init__(self, X, k, threads, tol):
        super().__init__(X, k, threads, tol)
        self.dirty = np.zeros(self.n, dtype=np.bool_)

    def first(self, C, assignment, costs):
        self.dirty[:] = False
        return self._chunked(lambda lo, hi: K.assign_block(self.X, C, lo, hi, assignment, costs))

    def step(self, C_prev, C, assignment, costs):
        moved = np.any(C_prev != C, axis=1)
        active = np.flatnonzero(moved).astype(np.int64)
        n = self._chunked(lambda lo, hi: K.rc_step(self.X, C, lo, hi, assignment, costs,
                                                   moved, active, self.dirty))
        self.dirty[:] = False
        return n

    def reset(self, points):
        self.dirty[points] = True

    def check_bounds(self, C, assignment, dist):
        pass


class _Elkan(_Strategy):
    def __init__(self, X, k, threads, tol):
        super().__init__(X, k, threads, tol)
        self.upper = np.empty(self.n)
        self.lower = np.empty((self.n, k))
        self.moves = np.zeros(k)
        self.moved = np.zeros(k, dtype=np.bool_)

    def first(self, C, assignment, costs):
        return self._chunked(lambda lo, hi: K.elk_init(self.X, C, lo, hi, assignment,
                                                       self.upper, self.lower))

    def step(self, C_prev, C, assignment, costs):
        n = K.centroid_moves(C_prev, C, self.moves, self.moved)
        n += self._chunked(lambda lo, hi: K.elk_step(self.X, C, lo, hi, assignment, self.upper,
                                                     self.lower, self.moves, SAFE, self.tol))
        return n

    def reset(self, points):
        self.upper[points] = np.inf
        self.lower[points] = 0.0

    def check_bounds(self, C, assignment, dist):
        slack = 1e3 * self.tol + 1e-12
        idx = np.arange(self.n)
        assert np.all(self.upper + slack >= dist[idx, assignment]), "elk upper bound violated"
        assert np.all(self.lower <= dist + slack), "elk lower bound violated"


class _Hamerly(_Strategy):
    def __init__(self, X, k, threads, tol):
        super().__init__(X, k, threads, tol)
        self.upper = np.empty(self.n)
        self.lower = np.empty(self.n)
        self.moves = np.zeros(k)
        self.moved = np.zeros(k, dtype=np.bool_)
        self.cc = np.zeros((k, k))
        self.half_sep = np.empty(k)
        self.cc_fresh = False

    def first(self, C, assignment, costs):
        self.cc_fresh = False
        return self._chunked(lambda lo, hi: K.ham_init(self.X, C, lo, hi, assignment,
                                                       self.upper, self.lower))

    def _centroid_pass(self, C_prev, C):
        n = K.centroid_moves(C_prev, C, self.moves, self.moved)
        n += K.refresh_cc(C, self.cc, self.moved, not self.cc_fresh)
        self.cc_fresh = True
        K.half_separation(self.cc, self.half_sep)
        return n

    def step(self, C_prev, C, assignment, costs):
        n = self._centroid_pass(C_prev, C)
        m1, i1, m2 = K.top2(self.moves)
        n += self._chunked(lambda lo, hi: K.ham_step(self.X, C, lo, hi, assignment, self.upper,
                                                     self.lower, self.moves, self.half_sep,
                                                     SAFE, self.tol, m1, i1, m2))
        return n

    def reset(self, points):
        self.upper[points] = np.inf
        self.lower[points] = 0.0

    def check_bounds(self, C, assignment, dist):
        slack = 1e3 * self.tol + 1e-12
        idx = np.arange(self.n)
        assert np.all(self.upper + slack >= dist[idx, assignment]), "upper bound violated"
        other = dist.copy()
        other[idx, assignment] = np.inf
        assert np.all(self.lower <= other.min(axis=1) + slack), "lower bound violated"


class _Exponion(_Hamerly):
    def __init__(self, X, k, threads, tol):
        super().__init__(X, k, threads, tol)
        self.order = np.zeros((k, max(k - 1, 1)), dtype=np.int64)

    def step(self, C_prev, C, assignment, costs):
        n = self._centroid_pass(C_prev, C)
        K.sorted_neighbours(self.cc, self.order)
        m1, i1, m2 = K.top2(self.moves)
        n += self._chunked(lambda lo, hi: K.exp_step(self.X, C, lo, hi, assignment, self.upper,
                                                     self.lower, self.moves, self.half_sep,
                                                     self.cc, self.order, SAFE, self.tol,
                                                     m1, i1, m2))
        return n


def yinyang_groups(C: np.ndarray, n_groups: int) -> np.ndarray:
    """Split centroids into contiguous runs along their widest coordinate.

    Grouping only affects how much gets skipped, never the result, so it is
    done without any distance evaluations.
    """
    k = C.shape[0]
    axis = int(np.argmax(C.max(axis=0) - C.min(axis=0)))
    order = np.argsort(C[:, axis], kind="mergesort")
    group_of = np.empty(k, dtype=np.int64)
    for g, part in enumerate(np.array_split(order, n_groups)):
        group_of[part] = g
    return group_of


class _Yinyang(_Strategy):
    def __init__(self, X, k, threads, tol, n_groups=None):
        super().__init__(X, k, threads, tol)
        self.n_groups = n_groups or max(1, math.ceil(k / 10))
        self.upper = np.empty(self.n)
        self.glower = np.empty((self.n, self.n_groups))
        self.moves = np.zeros(k)
        self.moved = np.zeros(k, dtype=np.bool_)

    def first(self, C, assignment, costs):
        self.group_of = yinyang_groups(C, self.n_groups)
        self.members = np.argsort(self.group_of, kind="mergesort").astype(np.int64)
        counts = np.bincount(self.group_of, minlength=self.n_groups)
        self.gstart = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        return self._chunked(lambda lo, hi: K.yy_init(self.X, C, lo, hi, assignment, self.upper,
                                                      self.glower, self.group_of, self.n_groups))

    def step(self, C_prev, C, assignment, costs):
        n = K.centroid_moves(C_prev, C, self.moves, self.moved)
        gmoves = np.zeros(self.n_groups)
        np.maximum.at(gmoves, self.group_of, self.moves)
        n += self._chunked(lambda lo, hi: K.yy_step(self.X, C, lo, hi, assignment, self.upper,
                                                    self.glower, self.moves, gmoves,
                                                    self.group_of, self.gstart, self.members,
                                                    SAFE, self.tol))
        return n

    def reset(self, points):
        self.upper[points] = np.inf
        self.glower[points] = 0.0

    def check_bounds(self, C, assignment, dist):
        slack = 1e3 * self.tol + 1e-12
        idx = np.arange(self.n)
        assert np.all(self.upper + slack >= dist[idx, assignment]), "yy upper bound violated"
        other = dist.copy()
        other[idx, assignment] = np.inf
        for g in range(self.n_groups):
            cols = self.group_of == g
            if cols.any():
                gmin = other[:, cols].min(axis=1)
                assert np.all(self.glower[:, g] <= gmin + slack), "yy group bound violated"


_STRATEGIES = {
    AcceleratorKind.NAIVE: _Naive,
    AcceleratorKind.RC: _ReducedComputation,
    AcceleratorKind.ELK: _Elkan,
    AcceleratorKind.HAM: _Hamerly,
    AcceleratorKind.YY: _Yinyang,
    AcceleratorKind.EXP: _Exponion,
}


def run_lloyd(data: Dataset, start: Configuration, accel="naive", ledger: DistanceLedger = None,
              max_iter: int = DEFAULT_MAX_ITER, threads: int = 1, debug: bool = False) -> LloydOutcome:
    """Alternate centroid and partition updates until the partition is a fixed point.

    The first step recomputes the centroids from ``start``'s partition.
    Clusters left empty by an assignment pass are repaired (see
    ``repair_empty``) before the next centroid update. With ``debug`` every
    accelerator bound is checked against freshly computed distances.
    """
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    if not start.check_sizes():
        raise ValueError("start sizes are inconsistent with its assignment")
    if ledger is None:
        ledger = DistanceLedger()
    kind = AcceleratorKind.parse(accel)
    X = data.points
    k = start.k
    tol = REL_TOL * _diameter(X)
    strategy = _STRATEGIES[kind](X, k, threads, tol)

    assignment = start.assignment.copy()
    sizes = start.sizes.copy()
    costs = np.empty(data.n)
    if np.any(sizes == 0):
        if start.costs is not None:
            costs[:] = start.costs
        else:
            ledger.add(K.point_costs(X, start.centroids, assignment, costs))
        repair_empty(assignment, sizes, costs)

    history = []
    C_prev = None
    converged = False
    iterations = 0
    while iterations < max_iter:
        iterations += 1
        C = update_centroids(data, assignment, sizes)
        previous = assignment.copy()
        if C_prev is None:
            ledger.add(strategy.first(C, assignment, costs))
        else:
            ledger.add(strategy.step(C_prev, C, assignment, costs))
        sizes = np.bincount(assignment, minlength=k)
        if not strategy.exact_costs:
            K.point_costs(X, C, assignment, costs)  # reporting only, not charged
        history.append(float(costs.sum()))
        if debug:
            strategy.check_bounds(C, assignment, _true_distances(X, C))
            if strategy.exact_costs:
                exact = _true_distances(X, C)[np.arange(data.n), assignment] ** 2
                assert np.allclose(costs, exact, rtol=1e-12, atol=1e-12 * (tol / REL_TOL) ** 2)
        C_prev = C
        if np.array_equal(previous, assignment):
            converged = True
            break
        if np.any(sizes == 0):
            if not strategy.exact_costs:
                # the cached costs above were not charged; repair reads them, so pay now
                ledger.add(data.n)
            strategy.reset(repair_empty(assignment, sizes, costs))

    config = Configuration(C_prev, assignment, sizes, costs.copy())
    return LloydOutcome(config, iterations, converged, history)


def _true_distances(X, C):
    diff = X[:, None, :] - C[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
