import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pnnsmooth import (Dataset, centroid_index, DistanceLedger, RngStream, WeightedCentroidSet, compute_J,
                       merge_cost, merge_pair, pnn_reduce, run_lloyd, seed, seed_pnn, seed_pnns,
                       seed_refine, split_evenly)
from pnnsmooth import _kernels as K
from pnnsmooth.data import MixtureSpec, gen_mixture
from pnnsmooth.oracles import naive_pnn
from pnnsmooth.pnn import MergeState, default_refine_J

from conftest import blobs


def test_merge_cost_value_and_symmetry():
    ledger = DistanceLedger()
    assert merge_cost([0.0], 1, [2.0], 1, ledger) == 2.0
    assert merge_cost([0.0, 0.0], 3, [1.0, 1.0], 1, ledger) == 1.5
    assert merge_cost([1.0, 1.0], 1, [0.0, 0.0], 3, ledger) == 1.5
    assert ledger.count == 3


def test_merge_pair_keeps_lower_index_at_weighted_mean():
    wset = WeightedCentroidSet(np.array([[0.0], [4.0], [10.0], [30.0]]), np.array([1, 3, 1, 1]))
    state = MergeState.build(wset, DistanceLedger())
    merge_pair(state, 1, 0, DistanceLedger())
    assert not state.alive[1] and state.alive[0]
    assert state.centroids[0, 0] == 3.0 and state.weights[0] == 4.0
    # nn table agrees with an exhaustive recomputation
    live = np.flatnonzero(state.alive)
    for a in live:
        costs = {b: K.merge_delta(state.centroids[a], state.weights[a], state.centroids[b],
                                  state.weights[b]) for b in live if b != a}
        best = min(costs.values())
        assert state.nn_cost[a] == best
        assert state.nn[a] == min(b for b, v in costs.items() if v == best)


def test_merge_pair_rejects_dead_cluster():
    state = MergeState.build(WeightedCentroidSet(np.eye(3), np.ones(3, int)), DistanceLedger())
    merge_pair(state, 0, 2, DistanceLedger())
    with pytest.raises(ValueError):
        merge_pair(state, 0, 2, DistanceLedger())


def test_pnn_reduce_pairs_neighbours():
    wset = WeightedCentroidSet(np.array([[0.0], [0.1], [5.0], [5.1]]), np.ones(4, int))
    out = pnn_reduce(wset, 2, DistanceLedger())
    assert np.allclose(out.centroids.ravel(), [0.05, 5.05])
    assert out.weights.tolist() == [2, 2]


def test_pnn_reduce_bounds():
    wset = WeightedCentroidSet(np.eye(3), np.ones(3, int))
    with pytest.raises(ValueError):
        pnn_reduce(wset, 0, DistanceLedger())
    with pytest.raises(ValueError):
        pnn_reduce(wset, 4, DistanceLedger())
    ledger = DistanceLedger()
    same = pnn_reduce(wset, 3, ledger)
    assert np.array_equal(same.centroids, wset.centroids) and ledger.count == 0


@st.composite
def weighted_sets(draw):
    m = draw(st.integers(2, 64))
    dim = draw(st.integers(1, 3))
    if draw(st.booleans()):
        coords = draw(st.lists(st.integers(0, 3), min_size=m * dim, max_size=m * dim))
        C = np.array(coords, float).reshape(m, dim)
    else:
        C = np.random.default_rng(draw(st.integers(0, 2**31))).random((m, dim))
    w = np.array(draw(st.lists(st.integers(1, 5), min_size=m, max_size=m)))
    target = draw(st.integers(1, m))
    return C, w, target


@settings(max_examples=150, deadline=None)
@given(weighted_sets())
def test_pnn_matches_naive_oracle(case):
    C, w, target = case
    out, merges = pnn_reduce(WeightedCentroidSet(C, w), target, DistanceLedger(), return_merges=True)
    expected, cents, weights = naive_pnn(C, w, target)
    assert [tuple(p) for p in merges.tolist()] == expected
    assert np.array_equal(out.centroids, cents)
    assert out.weights.tolist() == weights.astype(int).tolist()


@settings(max_examples=40, deadline=None)
@given(weighted_sets())
def test_python_merge_pair_matches_kernel(case):
    C, w, target = case
    state = MergeState.build(WeightedCentroidSet(C, w), DistanceLedger())
    trace = []
    while state.n_alive > target:
        a, b = state.cheapest_pair()
        trace.append((a, b))
        merge_pair(state, a, b, DistanceLedger())
    _, merges = pnn_reduce(WeightedCentroidSet(C, w), target, DistanceLedger(), return_merges=True)
    assert trace == [tuple(p) for p in merges.tolist()]


def test_parallel_kernel_matches_serial():
    g = np.random.default_rng(2)
    C = g.integers(0, 30, (900, 2)).astype(float)
    w = g.integers(1, 4, 900).astype(float)
    results = []
    for fn, start in ((K.pnn_reduce_serial, 10**9), (K.pnn_reduce_parallel, 500)):
        Cc, alive = C.copy(), np.ones(900, dtype=np.bool_)
        nn, cost = np.empty(900, np.int64), np.empty(900)
        ww = w.copy()
        K.pnn_table(Cc, ww, nn, cost)
        merges = np.empty((880, 2), np.int64)
        count = fn(Cc, ww, alive, nn, cost, 20, merges, start)
        results.append((merges, Cc[alive], count))
    assert np.array_equal(results[0][0], results[1][0])
    assert np.array_equal(results[0][1], results[1][1])
    assert results[0][2] == results[1][2]


def test_weight_is_conserved():
    g = np.random.default_rng(5)
    C, w = g.random((120, 3)), g.integers(1, 10, 120)
    for target in (1, 2, 17, 119):
        out = pnn_reduce(WeightedCentroidSet(C, w), target, DistanceLedger())
        assert out.m == target and out.total_weight == w.sum()
        assert np.allclose(out.weights @ out.centroids, w @ C)


def test_seed_pnn_deterministic():
    data = blobs(1, 100, 2, 4)
    a = seed_pnn(data, 4, DistanceLedger())
    b = seed_pnn(data, 4, DistanceLedger())
    assert np.array_equal(a.centroids, b.centroids)
    assert a.sizes.sum() == 100


def test_split_evenly():
    plan = split_evenly(72, 3, RngStream(0))
    assert plan.sizes().tolist() == [24, 24, 24]
    assert sorted(np.concatenate([plan.members(s) for s in range(3)]).tolist()) == list(range(72))
    assert sorted(split_evenly(10, 3, RngStream(1)).sizes().tolist()) == [3, 3, 4]
    assert split_evenly(5, 1, None).subset_of.tolist() == [0] * 5
    with pytest.raises(ValueError):
        split_evenly(3, 4, RngStream(0))


def test_compute_J():
    assert compute_J(72, 4, 1.0) == 3
    assert compute_J(1000, 10, 2 * 10 / 1000) == 1
    assert compute_J(1000, 10, 2 * 1000 / 10) == 100
    assert compute_J(1000, 10, 1e9) == 100
    assert compute_J(5000, 20, 1.0) == math.ceil(math.sqrt(5000 / 40))
    with pytest.raises(ValueError):
        compute_J(10, 2, 0.0)


def test_pnns_single_subset_is_inner_plus_lloyd():
    data = blobs(3, 60, 2, 3)
    k = 6
    rho = 2 * k / data.n
    got = seed_pnns(data, k, "km++", rho, RngStream(7), DistanceLedger())
    start = seed(data, k, "km++", RngStream(7), DistanceLedger()).config
    ref = run_lloyd(data, start, "naive", DistanceLedger()).config
    assert np.array_equal(got.assignment, ref.assignment)
    assert np.allclose(np.sort(got.centroids, axis=0), np.sort(ref.centroids, axis=0))


def test_pnns_recovers_separated_centres():
    # 72 points in 4 tight groups, k=4, giving J=3 subsets of 24
    centres = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    data, gt = gen_mixture(MixtureSpec(k_gt=4, dim=2, sigma=0.05, points_per_cluster=18,
                                       seed=3, centers=centres))
    assert compute_J(data.n, 4, 1.0) == 3
    for s in range(50):
        cfg = seed_pnns(data, 4, "unif", 1.0, RngStream(s), DistanceLedger())
        assert centroid_index(cfg.centroids, gt) == 0
        dist = np.sqrt(((cfg.centroids[:, None] - centres[None]) ** 2).sum(-1))
        assert dist.min(axis=0).max() < 0.5  # closer to its own centre than to any other
        final = run_lloyd(data, cfg, "naive", DistanceLedger()).config.centroids
        dist = np.sqrt(((final[:, None] - centres[None]) ** 2).sum(-1))
        assert dist.min(axis=0).max() < 0.05


def test_pnns_detailed_and_ndc():
    data = blobs(4, 800, 2, 8)
    base = DistanceLedger()
    seed(data, 8, "maxmin", RngStream(0), base)
    ledger = DistanceLedger()
    res = seed_pnns(data, 8, "maxmin", 1.0, RngStream(0), ledger, detailed=True)
    assert res.j == compute_J(800, 8, 1.0) == 8
    assert len(res.subset_iterations) == 8
    assert ledger.count >= base.count + 800 * 8


def test_pnns_rejects_nesting():
    with pytest.raises(ValueError):
        seed_pnns(blobs(0, 50, 2, 2), 2, "pnns(km++)", 1.0, RngStream(0), DistanceLedger())


def test_refine_structure():
    data = blobs(5, 500, 2, 5)
    res = seed_refine(data, 5, "km++", None, RngStream(0), DistanceLedger(), detailed=True)
    assert res.j == 10 and len(res.subset_iterations) == 10
    assert default_refine_J(50, 5) == 5
    assert default_refine_J(51, 5) == 10
    res = seed_refine(data, 5, "unif", 3, RngStream(0), DistanceLedger(), detailed=True)
    assert res.j == 3
    with pytest.raises(ValueError):
        seed_refine(data, 5, "unif", 101, RngStream(0), DistanceLedger())
    with pytest.raises(ValueError):
        seed_refine(data, 5, "unif", 0, RngStream(0), DistanceLedger())


def test_meta_seeders_are_reproducible():
    data = blobs(6, 400, 3, 6)
    for spec in ("pnns(gkm++)", "ref(maxmin)", "pnns(ref(unif))"):
        a = seed(data, 6, spec, RngStream(11), DistanceLedger()).config
        b = seed(data, 6, spec, RngStream(11), DistanceLedger()).config
        assert np.array_equal(a.centroids, b.centroids)
