"""Seeder specifications and the linear baseline seeders.

Every seeder returns a full Configuration: the chosen centroids together
with the optimal partition for them, which the seeders below obtain as a
byproduct of maintaining each point's distance to its nearest centroid.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels as K
from .core import Configuration, Dataset, DistanceLedger, RngStream, assigned_configuration

_BASIC = ("unif", "maxmin", "kmpp", "gkmpp", "pnn")
_META = ("refine", "pnns")
_ALIASES = {"km++": "kmpp", "gkm++": "gkmpp", "ref": "refine"}
_DISPLAY = {"kmpp": "km++", "gkmpp": "gkm++", "refine": "ref"}


@dataclass(frozen=True)
class SeederSpec:
    kind: str
    inner: Optional["SeederSpec"] = None
    rho: float = 1.0
    j_override: Optional[int] = None
    s_override: Optional[int] = None

    def __post_init__(self):
        if self.kind not in _BASIC + _META:
            raise ValueError(f"unknown seeder kind {self.kind!r}")
        if self.kind in _META and self.inner is None:
            raise ValueError(f"{self.kind} needs an inner seeder")
        if self.kind not in _META and self.inner is not None:
            raise ValueError(f"{self.kind} does not take an inner seeder")
        if self.inner is not None and self.inner.contains("pnns"):
            raise ValueError("pnns cannot be nested inside another meta-seeder")
        if not self.rho > 0:
            raise ValueError("rho must be positive")
        if self.j_override is not None and (self.kind != "refine" or self.j_override < 1):
            raise ValueError("J applies to ref(...) only and must be >= 1")
        if self.s_override is not None and (self.kind != "gkmpp" or self.s_override < 1):
            raise ValueError("s applies to gkm++ only and must be >= 1")

    def contains(self, kind: str) -> bool:
        return self.kind == kind or (self.inner is not None and self.inner.contains(kind))

    def __str__(self):
        name = _DISPLAY.get(self.kind, self.kind)
        text = f"{name}({self.inner})" if self.inner is not None else name
        if self.kind == "pnns" and self.rho != 1.0:
            text += f";rho={self.rho:g}"
        if self.j_override is not None:
            text += f";J={self.j_override}"
        if self.s_override is not None:
            text += f";s={self.s_override}"
        return text


def _split_top(text: str):
    """Split on ';' that are not inside parentheses."""
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth < 0:
                raise ValueError(f"unbalanced parentheses in {text!r}")
        if ch == ";" and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    if depth != 0:
        raise ValueError(f"unbalanced parentheses in {text!r}")
    parts.append("".join(cur))
    return parts


def parse_seeder(text: str) -> SeederSpec:
    """Parse e.g. ``unif``, ``gkm++;s=3``, ``ref(km++);J=5``, ``pnns(km++);rho=1``."""
    head, *options = [p.strip() for p in _split_top(text.strip())]
    m = re.fullmatch(r"([A-Za-z+]+)\s*(?:\((.*)\))?", head)
    if not m:
        raise ValueError(f"cannot parse seeder {text!r}")
    name, inner_text = m.group(1).lower(), m.group(2)
    kind = _ALIASES.get(name, name)
    kwargs = {}
    for opt in options:
        key, sep, value = opt.partition("=")
        if not sep:
            raise ValueError(f"malformed option {opt!r} in {text!r}")
        key = key.strip()
        try:
            if key == "rho":
                kwargs["rho"] = float(value)
            elif key == "J":
                kwargs["j_override"] = int(value)
            elif key == "s":
                kwargs["s_override"] = int(value)
            else:
                raise ValueError(f"unknown option {key!r} in {text!r}")
        except ValueError as exc:
            raise ValueError(f"bad option {opt!r} in {text!r}: {exc}") from None
    if "rho" in kwargs and kind != "pnns":
        raise ValueError("rho applies to pnns(...) only")
    inner = parse_seeder(inner_text) if inner_text is not None else None
    return SeederSpec(kind, inner, **kwargs)


def greedy_candidates(k: int) -> int:
    """Candidates per step for greedy k-means++: floor(2 + ln k)."""
    return int(math.floor(2.0 + math.log(k)))


def _check_k(data: Dataset, k: int):
    if k < 1:
        raise ValueError("k must be at least 1")
    if k > data.n:
        raise ValueError(f"k={k} exceeds the number of points N={data.n}")


def seed_unif(data: Dataset, k: int, rng: RngStream, ledger: DistanceLedger, threads: int = 1):
    _check_k(data, k)
    idx = np.sort(rng.sample_without_replacement(data.n, k))
    return assigned_configuration(data, data.points[idx], ledger, threads)


def seed_maxmin(data: Dataset, k: int, rng: RngStream, ledger: DistanceLedger):
    _check_k(data, k)
    X = data.points
    n = data.n
    chosen = np.empty(k, dtype=np.int64)
    chosen[0] = rng.integer(n)
    costs = np.empty(n)
    ledger.add(K.distances_to(X, X[chosen[0]], costs))
    assignment = np.zeros(n, dtype=np.int64)
    for a in range(1, k):
        chosen[a] = int(np.argmax(costs))
        ledger.add(K.update_nearest(X, X[chosen[a]], a, costs, assignment))
    return _config(X[chosen], assignment, costs)


def d2_sample(costs: np.ndarray, rng: RngStream, cum: Optional[np.ndarray] = None) -> int:
    """Draw an index with probability proportional to ``costs``."""
    if cum is None:
        cum = np.cumsum(costs)
    total = cum[-1]
    if not total > 0:
        raise ValueError("all remaining points coincide with chosen centroids; "
                         "k exceeds the number of distinct points")
    i = int(np.searchsorted(cum, rng.random() * total, side="right"))
    if i >= cum.shape[0]:
        i = int(np.flatnonzero(costs > 0)[-1])
    return i


def seed_kmpp(data: Dataset, k: int, rng: RngStream, ledger: DistanceLedger):
    return seed_gkmpp(data, k, rng, ledger, s_override=1)


def seed_gkmpp(data: Dataset, k: int, rng: RngStream, ledger: DistanceLedger,
               s_override: Optional[int] = None):
    """Greedy k-means++; with one candidate per step this is plain k-means++.

    Each candidate is scored by the SSE obtained when it joins the current
    centroids, using one pass over the points per candidate.
    """
    _check_k(data, k)
    s = s_override if s_override is not None else greedy_candidates(k)
    X = data.points
    n = data.n
    centroids = np.empty((k, data.dim))
    first = rng.integer(n)
    centroids[0] = X[first]
    costs = np.empty(n)
    ledger.add(K.distances_to(X, X[first], costs))
    assignment = np.zeros(n, dtype=np.int64)
    cand_d = np.empty(n)
    best_d = np.empty(n)
    for a in range(1, k):
        cum = np.cumsum(costs)
        if s == 1:
            c = d2_sample(costs, rng, cum)
            ledger.add(K.update_nearest(X, X[c], a, costs, assignment))
            centroids[a] = X[c]
            continue
        best_c, best_sse = -1, np.inf
        for _ in range(s):
            c = d2_sample(costs, rng, cum)
            ledger.add(K.distances_to(X, X[c], cand_d))
            total = float(np.minimum(costs, cand_d).sum())
            if total < best_sse:
                best_c, best_sse = c, total
                best_d, cand_d = cand_d, best_d
        closer = best_d < costs
        costs[closer] = best_d[closer]
        assignment[closer] = a
        centroids[a] = X[best_c]
    return _config(centroids, assignment, costs)


def _config(centroids, assignment, costs):
    sizes = np.bincount(assignment, minlength=centroids.shape[0])
    return Configuration(centroids, assignment, sizes, costs)


@dataclass
class SeedingResult:
    config: Configuration
    subset_iterations: list = field(default_factory=list)
    j: Optional[int] = None


def seed(data: Dataset, k: int, spec, rng: RngStream, ledger: DistanceLedger,
         accel="naive", threads: int = 1) -> SeedingResult:
    """Run any seeder described by ``spec`` (a SeederSpec or its string form)."""
    if isinstance(spec, str):
        spec = parse_seeder(spec)
    if spec.kind == "unif":
        return SeedingResult(seed_unif(data, k, rng, ledger, threads))
    if spec.kind == "maxmin":
        return SeedingResult(seed_maxmin(data, k, rng, ledger))
    if spec.kind == "kmpp":
        return SeedingResult(seed_kmpp(data, k, rng, ledger))
    if spec.kind == "gkmpp":
        return SeedingResult(seed_gkmpp(data, k, rng, ledger, spec.s_override))

    from . import pnn

    if spec.kind == "pnn":
        return SeedingResult(pnn.seed_pnn(data, k, ledger, threads=threads))
    if spec.kind == "pnns":
        return pnn.seed_pnns(data, k, spec.inner, spec.rho, rng, ledger, accel=accel,
                             threads=threads, detailed=True)
    if spec.kind == "refine":
        return pnn.seed_refine(data, k, spec.inner, spec.j_override, rng, ledger, accel=accel,
                               threads=threads, detailed=True)
    raise AssertionError(spec.kind)


def seeding_ndc_floor(spec: SeederSpec, n: int, k: int) -> float:
    """Lower bound on the seeding NDC of ``spec`` (exact for the linear seeders)."""
    if spec.kind in ("unif", "maxmin", "kmpp"):
        return 1.0
    if spec.kind == "gkmpp":
        s = spec.s_override if spec.s_override is not None else greedy_candidates(k)
        return 1.0 / k + s * (k - 1) / k
    if spec.kind == "pnn":
        return (n - 1) / (2.0 * k) + 1.0
    if spec.kind in ("pnns", "refine"):
        return seeding_ndc_floor(spec.inner, n, k) + 1.0
    raise AssertionError(spec.kind)
