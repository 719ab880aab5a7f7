"""Scoring and aggregation of clustering runs. Nothing here touches a ledger."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np

from .core import Configuration, Dataset, RunReport


@dataclass(frozen=True)
class GroundTruth:
    centroids: np.ndarray

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.centroids, dtype=np.float64))
        if c.shape[0] < 1:
            raise ValueError("ground truth needs at least one centroid")
        object.__setattr__(self, "centroids", c)

    @property
    def k(self) -> int:
        return self.centroids.shape[0]


@dataclass
class AggregateStats:
    mean_sse: float
    std_sse: float
    min_sse: float
    mean_time: float
    std_time: float
    mean_ndc: float
    std_ndc: float
    mean_iters: float
    success_rate: Optional[float] = None

    def as_dict(self) -> dict:
        return asdict(self)


def sse(data: Dataset, config: Configuration) -> float:
    diff = data.points - config.centroids[config.assignment]
    return float(np.einsum("ij,ij->", diff, diff))


def centroid_index(centroids, gt) -> int:
    """Number of ground-truth centroids that are nobody's nearest ground-truth centroid."""
    gt_c = gt.centroids if isinstance(gt, GroundTruth) else np.atleast_2d(np.asarray(gt, float))
    found = np.atleast_2d(np.asarray(centroids, dtype=np.float64))
    diff = found[:, None, :] - gt_c[None, :, :]
    d2 = np.einsum("abk,abk->ab", diff, diff)
    matched = np.zeros(gt_c.shape[0], dtype=bool)
    matched[np.argmin(d2, axis=1)] = True
    return int(gt_c.shape[0] - matched.sum())


def success_rate(reports: Sequence[RunReport]) -> float:
    if not reports:
        raise ValueError("no reports")
    if any(r.ci is None for r in reports):
        raise ValueError("every report needs a centroid index to compute a success rate")
    return sum(r.ci == 0 for r in reports) / len(reports)


def scaled_iterations(final_iters, seeding_iters_per_subset=(), j: Optional[int] = None) -> float:
    """Final Lloyd iterations plus subset iterations counted at 1/J weight."""
    if j is None:
        return float(final_iters)
    if j < 1:
        raise ValueError("J must be at least 1")
    return float(final_iters) + float(sum(seeding_iters_per_subset)) / j


def _std(x: np.ndarray) -> float:
    return float(x.std(ddof=1)) if x.size > 1 else 0.0


def aggregate(reports: Sequence[RunReport]) -> AggregateStats:
    if not reports:
        raise ValueError("cannot aggregate an empty list of reports")
    s = np.array([r.sse for r in reports], dtype=float)
    t = np.array([r.wall_time_s for r in reports], dtype=float)
    d = np.array([r.ndc for r in reports], dtype=float)
    it = np.array([r.lloyd_iterations for r in reports], dtype=float)
    rate = success_rate(reports) if all(r.ci is not None for r in reports) else None
    return AggregateStats(float(s.mean()), _std(s), float(s.min()), float(t.mean()), _std(t),
                          float(d.mean()), _std(d), float(it.mean()), rate)
