"""Experiment runner: repetitions, result files and parameter sweeps."""

from __future__ import annotations

import csv
import io
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .core import Dataset, DistanceLedger, RngStream, RunReport
from .data import (MixtureSpec, ScalingRule, gen_mixture, load_ground_truth, load_points,
                   parse_mixture, scaling_transform)
from .lloyd import DEFAULT_MAX_ITER, AcceleratorKind, run_lloyd
from .metrics import GroundTruth, aggregate, centroid_index, scaled_iterations, sse
from .seeding import SeederSpec, parse_seeder, seed

log = logging.getLogger(__name__)

CSV_COLUMNS = ("rep", "seed", "sse", "iterations", "ndc", "time_s", "ci")
SUMMARY_COLUMNS = ("dataset", "seeder", "accel", "reps", "mean_sse", "std_sse", "min_sse",
                   "mean_time", "std_time", "mean_ndc", "std_ndc", "mean_iters", "success_rate")


@dataclass
class ExperimentConfig:
    k: int
    seeder: SeederSpec
    data_path: Optional[str] = None
    mixture: Optional[MixtureSpec] = None
    scaling: ScalingRule = field(default_factory=ScalingRule)
    accel: AcceleratorKind = AcceleratorKind.NAIVE
    reps: int = 1
    base_seed: int = 0
    threads: int = 1
    ground_truth_path: Optional[str] = None
    out: Optional[str] = None
    format: str = "csv"
    max_iter: int = DEFAULT_MAX_ITER

    def __post_init__(self):
        if isinstance(self.seeder, str):
            self.seeder = parse_seeder(self.seeder)
        if isinstance(self.mixture, str):
            self.mixture = parse_mixture(self.mixture)
        if isinstance(self.scaling, str):
            self.scaling = ScalingRule.parse(self.scaling)
        self.accel = AcceleratorKind.parse(self.accel)
        if (self.data_path is None) == (self.mixture is None):
            raise ValueError("give exactly one of a data path or a mixture spec")
        if self.reps < 1 or self.threads < 1 or self.k < 1:
            raise ValueError("k, reps and threads must be at least 1")
        if self.format not in ("csv", "json"):
            raise ValueError("format must be csv or json")

    @property
    def dataset_name(self) -> str:
        if self.data_path is not None:
            return Path(self.data_path).stem
        m = self.mixture
        return f"mixture(k={m.k_gt},dim={m.dim},seed={m.seed})"

    def echo(self) -> dict:
        return {"dataset": self.dataset_name, "data_path": self.data_path,
                "mixture": None if self.mixture is None else {
                    "k_gt": self.mixture.k_gt, "dim": self.mixture.dim,
                    "sigma": self.mixture.sigma, "points": self.mixture.counts(),
                    "seed": self.mixture.seed, "min_separation": self.mixture.min_separation},
                "scaling": self.scaling.kind if self.scaling.kind != "longitude_factor"
                else f"longitude:{self.scaling.factor:g}",
                "k": self.k, "seeder": str(self.seeder), "accel": self.accel.value,
                "reps": self.reps, "base_seed": self.base_seed, "threads": self.threads,
                "ground_truth_path": self.ground_truth_path, "max_iter": self.max_iter}


def prepare(config: ExperimentConfig):
    """Load (or generate) and scale the data; returns (Dataset, GroundTruth or None)."""
    gt = None
    if config.mixture is not None:
        data, gt = gen_mixture(config.mixture)
    else:
        data = load_points(config.data_path)
    if config.ground_truth_path is not None:
        gt = load_ground_truth(config.ground_truth_path)
    transform = scaling_transform(data, config.scaling)
    data = transform.forward(data)
    if gt is not None:
        if gt.centroids.shape[1] != data.dim:
            raise ValueError("ground truth dimension does not match the data")
        gt = GroundTruth(transform.forward(Dataset(gt.centroids)).points)
    return data, gt


def run_once(data: Dataset, k: int, spec, accel, rng_seed: int, gt: Optional[GroundTruth] = None,
             threads: int = 1, max_iter: int = DEFAULT_MAX_ITER, ledger: DistanceLedger = None):
    """One repetition: seed, run Lloyd to a fixed point, score. Returns (RunReport, outcome)."""
    if isinstance(spec, str):
        spec = parse_seeder(spec)
    ledger = ledger if ledger is not None else DistanceLedger()
    rng = RngStream(rng_seed)
    t0 = time.perf_counter()
    seeded = seed(data, k, spec, rng, ledger, accel=accel, threads=threads)
    seeding_count = ledger.count
    outcome = run_lloyd(data, seeded.config, accel, ledger, max_iter=max_iter, threads=threads)
    elapsed = time.perf_counter() - t0
    report = RunReport(
        sse=sse(data, outcome.config),
        lloyd_iterations=scaled_iterations(outcome.iterations, seeded.subset_iterations, seeded.j),
        ndc=ledger.count / (data.n * k),
        wall_time_s=elapsed,
        ci=None if gt is None else centroid_index(outcome.config.centroids, gt),
        seeding_ndc=seeding_count / (data.n * k),
        extra={"converged": outcome.converged, "final_iterations": outcome.iterations, "j": seeded.j},
    )
    return report, outcome


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def report_rows(reports: Sequence[RunReport], base_seed: int) -> list:
    return [{"rep": r, "seed": base_seed + r, "sse": rep.sse, "iterations": rep.lloyd_iterations,
             "ndc": rep.ndc, "time_s": rep.wall_time_s, "ci": rep.ci}
            for r, rep in enumerate(reports)]


def rows_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for row in rows:
        w.writerow([_fmt(row[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def summary_row(config: ExperimentConfig, reports) -> dict:
    stats = aggregate(reports).as_dict()
    return {"dataset": config.dataset_name, "seeder": str(config.seeder),
            "accel": config.accel.value, "reps": len(reports), **stats}


def summary_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_COLUMNS)
    for row in rows:
        w.writerow([_fmt(row[c]) for c in SUMMARY_COLUMNS])
    return buf.getvalue()


@dataclass
class RunResult:
    config: ExperimentConfig
    reports: list
    summary: dict


def cmd_run(config: ExperimentConfig, data=None, gt=None) -> RunResult:
    """Run ``config.reps`` repetitions; repetition r uses seed base_seed + r.

    Writes the per-repetition rows to ``config.out`` (CSV; the aggregate goes
    to a sibling ``.summary.csv``) or one JSON document holding metadata,
    rows and summary.
    """
    if data is None:
        data, gt = prepare(config)
    reports = []
    for r in range(config.reps):
        rep, _ = run_once(data, config.k, config.seeder, config.accel, config.base_seed + r, gt,
                          config.threads, config.max_iter)
        reports.append(rep)
        log.info("rep %d: sse=%.6g ndc=%.4g iters=%.4g ci=%s", r, rep.sse, rep.ndc,
                 rep.lloyd_iterations, rep.ci)
    result = RunResult(config, reports, summary_row(config, reports))
    if config.out is not None:
        write_result(result)
    return result


def write_result(result: RunResult) -> None:
    config = result.config
    rows = report_rows(result.reports, config.base_seed)
    out = Path(config.out)
    if config.format == "json":
        doc = {"metadata": {"library": "pnnsmooth", "version": __version__,
                            "columns": list(CSV_COLUMNS), "config": config.echo()},
               "rows": rows, "summary": result.summary}
        out.write_text(json.dumps(doc, indent=2) + "\n")
    else:
        out.write_text(rows_csv(rows))
        out.with_name(out.name + ".summary.csv").write_text(summary_csv([result.summary]))


def cmd_sweep(configs: Sequence[ExperimentConfig]):
    """Run every config and collect one summary row each, keyed by (dataset, seeder, accel).

    A failing member is logged and recorded in the returned error list; the
    remaining members still run.
    """
    if not configs:
        raise ValueError("empty sweep")
    rows, errors = [], []
    cache = {}
    for cfg in configs:
        try:
            key = (cfg.data_path, repr(cfg.mixture), cfg.scaling, cfg.ground_truth_path)
            if key not in cache:
                cache[key] = prepare(cfg)
            data, gt = cache[key]
            rows.append(cmd_run(cfg, data, gt).summary)
        except Exception as exc:  # noqa: BLE001 - reported and skipped by design
            log.error("sweep member %s / %s failed: %s", cfg.seeder, cfg.accel.value, exc)
            errors.append((cfg, exc))
    return rows, errors


def format_table(rows) -> str:
    cols = ("dataset", "seeder", "accel", "reps", "mean_sse", "min_sse", "mean_ndc",
            "mean_iters", "mean_time", "success_rate")
    cells = [cols] + [tuple(_short(r[c]) for c in cols) for r in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(cols))]
    return "\n".join("  ".join(v.ljust(w) for v, w in zip(row, widths)) for row in cells)


def _short(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)
