"""Domain types, randomness and the instrumented squared-distance kernel."""

from __future__ import annotations

import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels as K

# Fixed work-chunk length. Threaded passes and the centroid accumulation
# split N at these boundaries whatever the thread count, so summation order
# (and therefore every bit of the output) does not depend on ``threads``.
CHUNK = 8192


class Dataset:
    """Immutable N x D matrix of float64 points."""

    __slots__ = ("points",)

    def __init__(self, points):
        arr = np.array(points, dtype=np.float64, order="C", copy=True)
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"dataset must be a non-empty N x D matrix, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("dataset contains non-finite entries")
        arr.setflags(write=False)
        self.points = arr

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def subset(self, index) -> "Dataset":
        return Dataset(self.points[np.asarray(index)])

    def __len__(self):
        return self.n

    def __repr__(self):
        return f"Dataset(n={self.n}, dim={self.dim})"


@dataclass
class Configuration:
    """Centroids plus partition.

    ``costs`` optionally caches each point's squared distance to its own
    centroid; seeders fill it as a byproduct so Lloyd's empty-cluster repair
    does not need extra distance computations.
    """

    centroids: np.ndarray
    assignment: np.ndarray
    sizes: np.ndarray
    costs: Optional[np.ndarray] = None

    def __post_init__(self):
        self.centroids = np.ascontiguousarray(self.centroids, dtype=np.float64)
        self.assignment = np.ascontiguousarray(self.assignment, dtype=np.int64)
        self.sizes = np.ascontiguousarray(self.sizes, dtype=np.int64)
        k = self.centroids.shape[0]
        if k < 1 or self.sizes.shape != (k,):
            raise ValueError("sizes must have one entry per centroid")
        if self.assignment.size and (self.assignment.min() < 0 or self.assignment.max() >= k):
            raise ValueError("assignment refers to a centroid that does not exist")
        if int(self.sizes.sum()) != self.assignment.shape[0]:
            raise ValueError("cluster sizes do not sum to N")

    @property
    def k(self) -> int:
        return self.centroids.shape[0]

    def check_sizes(self) -> bool:
        return bool(np.array_equal(np.bincount(self.assignment, minlength=self.k), self.sizes))


@dataclass
class WeightedCentroidSet:
    centroids: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.centroids = np.ascontiguousarray(self.centroids, dtype=np.float64)
        self.weights = np.ascontiguousarray(self.weights, dtype=np.int64)
        if self.centroids.ndim != 2 or self.weights.shape != (self.centroids.shape[0],):
            raise ValueError("need one weight per centroid")
        if self.weights.size and self.weights.min() < 1:
            raise ValueError("weights must be positive")

    @property
    def m(self) -> int:
        return self.centroids.shape[0]

    @property
    def total_weight(self) -> int:
        return int(self.weights.sum())


class DistanceLedger:
    """Counts squared-distance evaluations between D-dimensional vectors.

    Increments are serialised with a lock, so workers may charge it
    concurrently.
    """

    def __init__(self):
        self._count = 0
        self._lock = threading.Lock()

    @property
    def count(self) -> int:
        return self._count

    def add(self, n: int) -> None:
        n = int(n)
        if n < 0:
            raise ValueError("ledger is monotone")
        with self._lock:
            self._count += n

    def ndc(self, n: int, k: int) -> float:
        return self._count / (n * k)

    def __repr__(self):
        return f"DistanceLedger(count={self._count})"


class RngStream:
    """Seeded PCG64 stream; the same seed gives the same draws on every platform."""

    def __init__(self, seed: int):
        self.seed = int(seed)
        self.generator = np.random.Generator(np.random.PCG64(np.random.SeedSequence(self.seed)))

    def random(self) -> float:
        return float(self.generator.random())

    def randoms(self, size: int) -> np.ndarray:
        return self.generator.random(size)

    def integer(self, high: int) -> int:
        """Uniform integer in [0, high)."""
        return int(self.generator.integers(high))

    def sample_without_replacement(self, n: int, k: int) -> np.ndarray:
        return self.generator.choice(n, size=k, replace=False)

    def shuffle(self, arr: np.ndarray) -> None:
        self.generator.shuffle(arr)

    def spawn(self, count: int) -> list["RngStream"]:
        seeds = self.generator.integers(0, 2**63 - 1, size=count)
        return [RngStream(int(s)) for s in seeds]


@dataclass
class RunReport:
    sse: float
    lloyd_iterations: float
    ndc: float
    wall_time_s: float
    ci: Optional[int] = None
    seeding_ndc: Optional[float] = None
    extra: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# kernels

def sq_dist(a, b, ledger: DistanceLedger) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    assert a.shape == b.shape and a.ndim == 1, "dimension mismatch"
    ledger.add(1)
    return float(K.sqdist(a, b))


def chunks(n: int):
    return [(lo, min(lo + CHUNK, n)) for lo in range(0, n, CHUNK)]


def run_chunked(fn, n: int, threads: int = 1) -> int:
    """Call ``fn(lo, hi)`` over the fixed chunks of [0, n) and return the summed counts."""
    spans = chunks(n)
    if threads <= 1 or len(spans) == 1:
        return sum(fn(lo, hi) for lo, hi in spans)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return sum(pool.map(lambda s: fn(*s), spans))


def nearest(X: np.ndarray, C: np.ndarray, ledger: DistanceLedger, threads: int = 1):
    """Full nearest-centroid scan: (assignment, per-point squared distance)."""
    n = X.shape[0]
    assignment = np.empty(n, dtype=np.int64)
    costs = np.empty(n)
    C = np.ascontiguousarray(C, dtype=np.float64)
    count = run_chunked(lambda lo, hi: K.assign_block(X, C, lo, hi, assignment, costs), n, threads)
    ledger.add(count)
    return assignment, costs


def assign_all(data: Dataset, centroids, ledger: DistanceLedger, threads: int = 1):
    """Assign every point to its nearest centroid (lowest index on ties).

    Costs exactly N*k distance evaluations. Returns (assignment, sizes, sse).
    """
    centroids = np.ascontiguousarray(centroids, dtype=np.float64)
    if centroids.ndim != 2 or centroids.shape[0] < 1 or centroids.shape[1] != data.dim:
        raise ValueError("centroids must be a k x D matrix with k >= 1")
    assignment, costs = nearest(data.points, centroids, ledger, threads)
    sizes = np.bincount(assignment, minlength=centroids.shape[0])
    return assignment, sizes, float(costs.sum())


def assigned_configuration(data: Dataset, centroids, ledger: DistanceLedger, threads: int = 1):
    centroids = np.ascontiguousarray(centroids, dtype=np.float64)
    assignment, costs = nearest(data.points, centroids, ledger, threads)
    sizes = np.bincount(assignment, minlength=centroids.shape[0])
    return Configuration(centroids.copy(), assignment, sizes, costs)
