import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_force_accuracy, definitional_nmi, overlap_purity, pair_counting_ari
from mkcdnm import metrics
from mkcdnm.errors import InputError

labelings = st.integers(2, 12).flatmap(
    lambda n: st.tuples(st.lists(st.integers(0, 3), min_size=n, max_size=n),
                        st.lists(st.integers(0, 3), min_size=n, max_size=n)))


def test_accuracy_examples():
    assert metrics.accuracy([0, 1, 2], [0, 1, 2]) == 1.0
    assert metrics.accuracy([2, 0, 1], [0, 1, 2]) == 1.0
    assert metrics.accuracy([1, 1, 2, 2, 3, 3], [1, 1, 1, 2, 2, 2]) == 4 / 6


def test_nmi_examples():
    assert metrics.nmi([0, 0, 1, 1], [5, 5, 7, 7]) == 1.0
    assert abs(metrics.nmi([0, 0, 1, 1], [0, 1, 0, 1])) <= 1e-15
    assert abs(metrics.nmi([1, 1, 2, 2], [1, 2, 2, 2]) - definitional_nmi([1, 1, 2, 2], [1, 2, 2, 2])) <= 1e-12


def test_nmi_zero_entropy_conventions():
    assert metrics.nmi([0, 0, 0], [1, 1, 1]) == 1.0
    assert metrics.nmi([0, 0, 0], [0, 1, 1]) == 0.0


def test_purity_examples():
    assert metrics.purity([0, 1, 1], [0, 1, 1]) == 1.0
    assert metrics.purity([0, 1, 2, 3], [0, 0, 1, 1]) == 1.0
    assert metrics.purity([1, 1, 2, 2, 3, 3], [1, 1, 1, 2, 2, 2]) == 5 / 6


def test_ari_examples():
    assert metrics.ari([0, 0, 1, 1], [1, 1, 0, 0]) == 1.0
    assert metrics.ari([0, 0, 0, 0], [0, 0, 1, 1]) == 0.0
    assert abs(metrics.ari([1, 1, 2, 2], [1, 2, 1, 2]) - pair_counting_ari([1, 1, 2, 2], [1, 2, 1, 2])) <= 1e-12


def test_length_mismatch():
    for fn in (metrics.accuracy, metrics.nmi, metrics.purity, metrics.ari):
        with pytest.raises(InputError):
            fn([0, 1], [0, 1, 1])
    with pytest.raises(InputError):
        metrics.accuracy([], [])


@settings(max_examples=200, deadline=None)
@given(labelings)
def test_against_oracles(pair):
    pred, truth = pair
    assert metrics.accuracy(pred, truth) == brute_force_accuracy(pred, truth)
    assert abs(metrics.nmi(pred, truth) - definitional_nmi(pred, truth)) <= 1e-12
    assert abs(metrics.purity(pred, truth) - overlap_purity(pred, truth)) <= 1e-12
    assert abs(metrics.ari(pred, truth) - pair_counting_ari(pred, truth)) <= 1e-12


@settings(max_examples=100, deadline=None)
@given(labelings, st.permutations(range(4)), st.permutations(range(4)))
def test_relabeling_invariance(pair, perm_a, perm_b):
    pred, truth = pair
    p2 = [perm_a[v] for v in pred]
    t2 = [perm_b[v] for v in truth]
    for fn in (metrics.accuracy, metrics.nmi, metrics.purity, metrics.ari):
        assert abs(fn(pred, truth) - fn(p2, t2)) <= 1e-12


@settings(max_examples=100, deadline=None)
@given(labelings)
def test_ranges_and_ordering(pair):
    pred, truth = pair
    r = metrics.evaluate(pred, truth)
    assert 0 <= r.acc <= 1 and 0 <= r.nmi <= 1 and 0 <= r.purity <= 1
    assert -1 <= r.ari <= 1
    assert r.purity >= r.acc
    assert sum(map(sum, r.confusion)) == len(pred)
    if len(set(pred)) == len(set(truth)):
        assert metrics.accuracy(pred, truth) == metrics.accuracy(truth, pred)


def test_restart_summary():
    truth = [0, 0, 1, 1]
    runs = np.array([[0, 0, 1, 1], [0, 1, 0, 1]])
    s = metrics.restart_summary(runs, truth)
    assert s["acc"]["mean"] == 0.75 and s["acc"]["std"] == 0.25
    assert set(s) == {"acc", "nmi", "purity", "ari"}
