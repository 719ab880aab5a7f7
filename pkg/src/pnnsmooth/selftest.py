"""Embedded property suite behind ``pnnsmooth selftest``."""

from __future__ import annotations

import time

import numpy as np

from .core import Dataset, DistanceLedger, RngStream, WeightedCentroidSet
from .data import apply_scaling, gen_mixture, MixtureSpec, scaling_transform
from .lloyd import AcceleratorKind, run_lloyd
from .metrics import GroundTruth, centroid_index
from .oracles import naive_pnn
from .pnn import pnn_reduce, seed_pnns
from .seeding import greedy_candidates, parse_seeder, seed


class TamperedLedger(DistanceLedger):
    """Drops one evaluation from every batch it is charged; a negative control."""

    def add(self, n):
        super().add(max(int(n) - 1, 0))


def _blobs(seed, n, dim, k_true, spread=0.05):
    g = np.random.default_rng(seed)
    centers = g.random((k_true, dim))
    return Dataset(centers[g.integers(0, k_true, n)] + g.normal(0, spread, (n, dim)))


def prop_accelerator_exactness(ledger_cls):
    for inst in range(8):
        g = np.random.default_rng(inst)
        n, dim, k = int(g.integers(50, 600)), int(g.integers(2, 9)), int(g.integers(2, 17))
        data = _blobs(inst, n, dim, int(g.integers(2, k + 4)), g.uniform(0.02, 0.2))
        ref = None
        for kind in AcceleratorKind:
            start = seed(data, k, "km++", RngStream(inst), DistanceLedger()).config
            out = run_lloyd(data, start, kind, ledger_cls())
            got = (out.iterations, out.config.assignment, out.sse)
            if ref is None:
                ref = got
            elif got[0] != ref[0] or not np.array_equal(got[1], ref[1]) \
                    or abs(got[2] - ref[2]) > 1e-9 * ref[2]:
                return False
    return True


def prop_seeding_ndc(ledger_cls):
    for inst, (n, k) in enumerate([(200, 7), (513, 20), (64, 64), (97, 1)]):
        data = _blobs(inst, n, 3, 5)
        for name in ("unif", "maxmin", "km++", "gkm++"):
            ledger = ledger_cls()
            seed(data, k, name, RngStream(inst), ledger)
            if name == "gkm++":
                s = greedy_candidates(k)
                expected = n + s * (k - 1) * n
            else:
                expected = n * k
            if ledger.count != expected:
                return False
    return True


def prop_pnn_oracle(ledger_cls):
    g = np.random.default_rng(7)
    for _ in range(25):
        m = int(g.integers(2, 65))
        target = int(g.integers(1, m + 1))
        if g.random() < 0.5:
            C = g.integers(0, 4, (m, 2)).astype(float)  # forces tied costs
        else:
            C = g.random((m, int(g.integers(1, 5))))
        w = g.integers(1, 6, m)
        _, merges = pnn_reduce(WeightedCentroidSet(C, w), target, ledger_cls(), return_merges=True)
        expected, _, _ = naive_pnn(C, w, target)
        if [tuple(r) for r in merges.tolist()] != expected:
            return False
    return True


def prop_conservation(ledger_cls):
    g = np.random.default_rng(3)
    C = g.random((50, 3))
    w = g.integers(1, 9, 50)
    for target in (1, 7, 50):
        if pnn_reduce(WeightedCentroidSet(C, w), target, ledger_cls()).total_weight != w.sum():
            return False
    return True


def prop_ci_invariance(ledger_cls):
    g = np.random.default_rng(11)
    for _ in range(20):
        C = g.random((int(g.integers(1, 12)), 2))
        gt = g.random((int(g.integers(1, 12)), 2))
        if centroid_index(C, GroundTruth(C)) != 0:
            return False
        base = centroid_index(C, GroundTruth(gt))
        if centroid_index(g.permutation(C), GroundTruth(g.permutation(gt))) != base:
            return False
    return True


def prop_pnns_ndc_bound(ledger_cls):
    data, _ = gen_mixture(MixtureSpec(k_gt=8, dim=2, sigma=0.03, points_per_cluster=80, seed=5,
                                      min_separation=0.15))
    k = 8
    for name in ("unif", "maxmin", "km++", "gkm++"):
        base = ledger_cls()
        seed(data, k, name, RngStream(1), base)
        ledger = ledger_cls()
        seed_pnns(data, k, parse_seeder(name), 1.0, RngStream(1), ledger)
        if ledger.count < base.count + data.n * k:
            return False
    return True


def prop_sse_monotone(ledger_cls):
    for inst in range(5):
        data = _blobs(100 + inst, 400, 2, 9, 0.1)
        start = seed(data, 12, "unif", RngStream(inst), ledger_cls()).config
        hist = run_lloyd(data, start, "naive", ledger_cls()).sse_history
        if any(b > a * (1 + 1e-12) for a, b in zip(hist, hist[1:])):
            return False
    return True


def prop_scaling_roundtrip(ledger_cls):
    data = _blobs(9, 300, 4, 3, 2.0)
    for rule in ("unitbox", "pm1", "longitude:1.7"):
        t = scaling_transform(data, rule)
        if not np.allclose(t.inverse(t.forward(data)).points, data.points, rtol=0, atol=1e-12):
            return False
    box = apply_scaling(data, "unitbox").points
    return box.min() == 0.0 and abs(box.max() - 1.0) < 1e-15


PROPERTIES = [
    ("accelerator exactness", prop_accelerator_exactness),
    ("seeding NDC exactness", prop_seeding_ndc),
    ("PNN oracle equivalence", prop_pnn_oracle),
    ("weight conservation", prop_conservation),
    ("CI invariance", prop_ci_invariance),
    ("pnns NDC bound", prop_pnns_ndc_bound),
    ("SSE monotonicity", prop_sse_monotone),
    ("scaling round trip", prop_scaling_roundtrip),
]


def cmd_selftest(tamper: bool = False, out=print) -> int:
    """Run every property, print one line each, return a process exit status."""
    ledger_cls = TamperedLedger if tamper else DistanceLedger
    failures = 0
    for name, prop in PROPERTIES:
        t0 = time.perf_counter()
        try:
            ok = bool(prop(ledger_cls))
            detail = ""
        except Exception as exc:  # noqa: BLE001 - any crash is a failed property
            ok, detail = False, f" ({type(exc).__name__}: {exc})"
        failures += not ok
        out(f"{'PASS' if ok else 'FAIL'}  {name}  [{time.perf_counter() - t0:.2f}s]{detail}")
    out(f"{len(PROPERTIES) - failures}/{len(PROPERTIES)} properties passed")
    return 0 if failures == 0 else 1
