import threading

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from pnnsmooth import Configuration, Dataset, DistanceLedger, RngStream, assign_all, sq_dist
from pnnsmooth.core import CHUNK, WeightedCentroidSet, chunks
from pnnsmooth.oracles import brute_assign


def test_sq_dist_pythagoras():
    ledger = DistanceLedger()
    assert sq_dist(np.array([0.0, 0.0]), np.array([3.0, 4.0]), ledger) == 25.0
    assert ledger.count == 1


def test_sq_dist_self_is_zero():
    ledger = DistanceLedger()
    x = np.array([1.5, -2.0, 7.0])
    assert sq_dist(x, x, ledger) == 0.0


def test_sq_dist_shape_mismatch():
    with pytest.raises((ValueError, AssertionError)):
        sq_dist(np.zeros(2), np.zeros(3), DistanceLedger())


def test_assign_all_one_pass_costs_nk():
    data = Dataset(np.random.default_rng(0).random((37, 3)))
    C = data.points[[0, 5, 9, 20]]
    ledger = DistanceLedger()
    assignment, sizes, total = assign_all(data, C, ledger)
    assert ledger.count == 37 * 4
    assert ledger.ndc(37, 4) == 1.0
    assert sizes.sum() == 37
    ref, costs = brute_assign(data.points, C)
    assert np.array_equal(assignment, ref)
    assert total == pytest.approx(costs.sum(), rel=1e-12)


def test_assign_ties_go_to_lowest_index():
    data = Dataset([[0.0], [1.0], [2.0]])
    C = np.array([[1.0], [0.0], [2.0], [0.0]])
    assignment, sizes, _ = assign_all(data, C, DistanceLedger())
    assert assignment.tolist() == [1, 0, 2]
    data = Dataset([[0.5]])
    assignment, _, _ = assign_all(data, np.array([[0.0], [1.0]]), DistanceLedger())
    assert assignment.tolist() == [0]


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 60), st.integers(1, 4)),
              elements=st.integers(-3, 3).map(float)),
       st.integers(1, 6), st.integers(0, 1000))
def test_assign_matches_brute_force(points, k, seed):
    data = Dataset(points)
    idx = np.random.default_rng(seed).integers(0, data.n, k)
    C = data.points[idx]
    assignment, sizes, _ = assign_all(data, C, DistanceLedger())
    ref, _ = brute_assign(data.points, C)
    assert np.array_equal(assignment, ref)
    assert np.array_equal(np.bincount(ref, minlength=k), sizes)


def test_threads_do_not_change_results():
    g = np.random.default_rng(1)
    data = Dataset(g.random((3 * CHUNK + 17, 2)))
    C = g.random((5, 2))
    a1, s1, t1 = assign_all(data, C, DistanceLedger(), threads=1)
    a3, s3, t3 = assign_all(data, C, DistanceLedger(), threads=3)
    assert np.array_equal(a1, a3) and np.array_equal(s1, s3) and t1 == t3


def test_chunks_cover_range():
    spans = list(chunks(2 * CHUNK + 5))
    assert spans[0] == (0, CHUNK) and spans[-1] == (2 * CHUNK, 2 * CHUNK + 5)


def test_dataset_validation():
    with pytest.raises(ValueError):
        Dataset(np.zeros((0, 2)))
    with pytest.raises(ValueError):
        Dataset([[0.0, np.nan]])
    d = Dataset([1.0, 2.0])
    assert (d.n, d.dim) == (2, 1)
    with pytest.raises(ValueError):
        d.points[0, 0] = 3.0


def test_configuration_checks_sizes():
    with pytest.raises(ValueError):
        Configuration(np.zeros((2, 1)), np.array([0, 1, 1]), np.array([1, 1]))
    cfg = Configuration(np.zeros((2, 1)), np.array([0, 1, 1]), np.array([1, 2]))
    assert cfg.check_sizes()


def test_weighted_set_rejects_zero_weight():
    with pytest.raises(ValueError):
        WeightedCentroidSet(np.zeros((2, 1)), np.array([1, 0]))


def test_ledger_is_monotone_and_thread_safe():
    ledger = DistanceLedger()
    with pytest.raises(ValueError):
        ledger.add(-1)

    def work():
        for _ in range(1000):
            ledger.add(1)

    threads = [threading.Thread(target=work) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert ledger.count == 8000


def test_rng_stream_reproducible():
    a, b = RngStream(42), RngStream(42)
    assert [a.random() for _ in range(5)] == [b.random() for _ in range(5)]
    s = RngStream(3).sample_without_replacement(10, 10)
    assert sorted(s.tolist()) == list(range(10))
    kids1 = [r.random() for r in RngStream(5).spawn(3)]
    kids2 = [r.random() for r in RngStream(5).spawn(3)]
    assert kids1 == kids2 and len(set(kids1)) == 3
