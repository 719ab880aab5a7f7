"""Reading point files, rescaling them, and generating Gaussian mixtures."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .core import Dataset, RngStream
from .metrics import GroundTruth

_SPLIT = re.compile(r"[,\s]+")


def load_matrix(path) -> np.ndarray:
    rows = []
    width = None
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tokens = [t for t in _SPLIT.split(line) if t]
            try:
                row = [float(t) for t in tokens]
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-numeric token in {line!r}") from None
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise ValueError(f"{path}:{lineno}: expected {width} columns, found {len(row)}")
            rows.append(row)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return np.array(rows, dtype=np.float64)


def load_points(path) -> Dataset:
    """Whitespace- or comma-separated numbers, one point per line; '#' starts a comment."""
    return Dataset(load_matrix(path))


def load_ground_truth(path) -> GroundTruth:
    return GroundTruth(load_matrix(path))


def write_points(path, points) -> None:
    points = points.points if isinstance(points, Dataset) else np.atleast_2d(points)
    np.savetxt(path, points, fmt="%.17g")


# ---------------------------------------------------------------------------
# scaling

@dataclass(frozen=True)
class ScalingRule:
    kind: str = "none"  # none | unit_box | longitude_factor | per_column_pm1
    factor: float = 1.0

    @classmethod
    def parse(cls, text: str) -> "ScalingRule":
        t = text.strip().lower()
        if t == "none":
            return cls("none")
        if t in ("unitbox", "unit_box"):
            return cls("unit_box")
        if t == "pm1":
            return cls("per_column_pm1")
        if t.startswith("longitude"):
            _, _, f = t.partition(":")
            return cls("longitude_factor", float(f) if f else 1.7)
        raise ValueError(f"unknown scaling rule {text!r}")


@dataclass(frozen=True)
class ScalingTransform:
    """Per-column affine map ``y = (x - shift) * scale``."""

    shift: np.ndarray
    scale: np.ndarray

    def forward(self, data: Dataset) -> Dataset:
        return Dataset((data.points - self.shift) * self.scale)

    def inverse(self, data: Dataset) -> Dataset:
        safe = np.where(self.scale == 0, 1.0, self.scale)
        y = np.where(self.scale == 0, 0.0, data.points / safe)
        return Dataset(y + self.shift)


def scaling_transform(data: Dataset, rule: Union[ScalingRule, str]) -> ScalingTransform:
    if isinstance(rule, str):
        rule = ScalingRule.parse(rule)
    X = data.points
    D = data.dim
    shift = np.zeros(D)
    scale = np.ones(D)
    if rule.kind == "unit_box":
        lo, hi = X.min(), X.max()
        shift[:] = lo
        scale[:] = 1.0 / (hi - lo) if hi > lo else 1.0
    elif rule.kind == "longitude_factor":
        scale[0] = rule.factor
    elif rule.kind == "per_column_pm1":
        lo, hi = X.min(axis=0), X.max(axis=0)
        shift = (lo + hi) / 2.0
        span = hi - lo
        scale = np.where(span > 0, 2.0 / np.where(span > 0, span, 1.0), 0.0)
    elif rule.kind != "none":
        raise ValueError(f"unknown scaling rule {rule.kind!r}")
    return ScalingTransform(shift, scale)


def apply_scaling(data: Dataset, rule: Union[ScalingRule, str]) -> Dataset:
    """Rescale a dataset.

    ``unit_box`` shifts by the global minimum and divides by the global
    range, one factor for every dimension, so the data spans [0,1]^D
    without distorting distances. ``longitude_factor`` stretches column 0.
    ``per_column_pm1`` maps each column onto [-1, 1] (constant columns to 0).
    """
    return scaling_transform(data, rule).forward(data)


# ---------------------------------------------------------------------------
# synthetic mixtures

@dataclass(frozen=True)
class MixtureSpec:
    k_gt: int
    dim: int
    sigma: float
    points_per_cluster: Union[int, Sequence[int]]
    seed: int = 0
    centers: Optional[np.ndarray] = None
    min_separation: float = 0.0  # only used when centers are drawn at random

    def __post_init__(self):
        if self.k_gt < 1 or self.dim < 1:
            raise ValueError("k_gt and dim must be positive")
        if not self.sigma >= 0:
            raise ValueError("sigma must be non-negative")
        counts = self.counts()
        if len(counts) != self.k_gt or min(counts) < 1:
            raise ValueError("need a positive point count for every cluster")

    def counts(self) -> list:
        if isinstance(self.points_per_cluster, (int, np.integer)):
            return [int(self.points_per_cluster)] * self.k_gt
        return [int(c) for c in self.points_per_cluster]


def parse_mixture(text: str) -> MixtureSpec:
    """``k=20,dim=2,n=250,sigma=0.02,sep=0.15,seed=1``; ``n`` is points per cluster."""
    fields = {}
    for part in text.split(","):
        key, sep, value = part.partition("=")
        if not sep:
            raise ValueError(f"malformed mixture field {part!r}")
        fields[key.strip().lower()] = value.strip()
    if "k" not in fields:
        raise ValueError("mixture spec needs k=<clusters>")
    unknown = set(fields) - {"k", "dim", "sigma", "n", "seed", "sep"}
    if unknown:
        raise ValueError(f"unknown mixture fields: {sorted(unknown)}")
    return MixtureSpec(k_gt=int(fields["k"]), dim=int(fields.get("dim", 2)),
                       sigma=float(fields.get("sigma", 0.02)),
                       points_per_cluster=int(fields.get("n", 100)),
                       seed=int(fields.get("seed", 0)),
                       min_separation=float(fields.get("sep", 0.0)))


def gaussian(rng: RngStream, size: int) -> np.ndarray:
    """Standard normals by the Box-Muller transform over the stream's uniforms."""
    half = (size + 1) // 2
    u1 = 1.0 - rng.randoms(half)  # (0, 1]
    u2 = rng.randoms(half)
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.concatenate([r * np.cos(2.0 * math.pi * u2), r * np.sin(2.0 * math.pi * u2)])
    return z[:size]


def _random_centers(spec: MixtureSpec, rng: RngStream, max_tries: int = 100000) -> np.ndarray:
    centers = []
    tries = 0
    while len(centers) < spec.k_gt:
        c = rng.randoms(spec.dim)
        tries += 1
        if tries > max_tries:
            raise ValueError("could not place centers with the requested separation")
        if all(np.linalg.norm(c - o) >= spec.min_separation for o in centers):
            centers.append(c)
    return np.array(centers)


def gen_mixture(spec: MixtureSpec):
    """Isotropic Gaussian clusters, points grouped by cluster. Returns (Dataset, GroundTruth)."""
    rng = RngStream(spec.seed)
    if spec.centers is not None:
        centers = np.asarray(spec.centers, dtype=np.float64).reshape(spec.k_gt, spec.dim)
    else:
        centers = _random_centers(spec, rng)
    blocks = []
    for c, m in zip(centers, spec.counts()):
        blocks.append(c + spec.sigma * gaussian(rng, m * spec.dim).reshape(m, spec.dim))
    return Dataset(np.concatenate(blocks)), GroundTruth(centers)
