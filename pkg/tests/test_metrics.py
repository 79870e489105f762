import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import make_run_set
from dynas import synth
from dynas.ingest import DatasetIndex
from dynas.metrics import (
    Hit,
    Unhit,
    admissible_counts,
    ert,
    ert_table,
    hitting_time,
    hitting_time_table,
    is_admissible,
)
from dynas.model import DomainError, Finite, NeverHit, ProblemKey, RunSet, RunTrace

TRACE = RunTrace(1, ((1, 50.0), (10, 1.0), (30, 1e-9)))


@pytest.mark.parametrize("trace, i, expected", [
    (TRACE, 50, Hit(30)),
    (TRACE, 0, Hit(1)),
    (RunTrace(1, ((1, 50.0), (40, 1e-3))), 50, Unhit(40)),
    (TRACE, 10, Hit(10)),  # precision exactly on the target counts as a hit
])
def test_hitting_time(trace, i, expected):
    assert hitting_time(trace, i) == expected


def test_ert_mixed():
    rs = make_run_set([10, 20, None], budget=50)
    assert ert(rs, 50) == Finite(40.0, 2, 3)


def test_ert_all_success():
    assert ert(make_run_set([5, 5, 5], budget=5), 50) == Finite(5.0, 3, 3)


def test_ert_never_hit():
    assert ert(make_run_set([None] * 3, budget=100), 50) == NeverHit(3)


def test_ert_empty():
    with pytest.raises(DomainError):
        ert(RunSet("A", ProblemKey(1, 5), ()), 50)


def test_ert_table_consistency():
    rs = make_run_set([10, 20, None], budget=50)
    tab = ert_table(rs)
    assert tab[50] == ert(rs, 50)
    assert len(tab) == 51


def test_ert_table_strictly_increasing_single_run():
    from dynas.model import target_value
    pts = tuple((i + 1, target_value(i)) for i in range(51))
    tab = ert_table(RunSet("A", ProblemKey(1, 5), (RunTrace(1, pts),)))
    vals = [v.ert for v in tab.values]
    assert vals == [float(i + 1) for i in range(51)]


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32))
def test_ert_table_matches_independent_calls(seed):
    idx = synth.generate(synth.random_spec(seed, 1, runs=7, never=0.5))
    (rs,) = idx.entries.values()
    tab = ert_table(rs)
    assert tab.values == tuple(ert(rs, i) for i in range(51))
    assert tab.values == synth.oracle_ert_table(rs).values


def test_hitting_table_monotone():
    idx = synth.generate(synth.random_spec(3, 4, runs=20, never=0.3))
    for rs in idx.entries.values():
        ht = hitting_time_table(rs)
        for row in ht.hits:
            hit = row[row >= 0]
            assert np.all(np.diff(hit) >= 0)
            # once unhit, unhit for every harder target
            first_miss = np.flatnonzero(row < 0)
            if len(first_miss):
                assert np.all(row[first_miss[0]:] < 0)


@pytest.mark.parametrize("hits, expected", [
    ([None] * 14 + [30], True),
    ([10] * 14, False),
    ([None] * 20, False),
])
def test_is_admissible(hits, expected):
    assert is_admissible(make_run_set(hits)) is expected


def test_admissible_counts():
    index = DatasetIndex()
    p = ProblemKey(1, 5)
    index.add(make_run_set([10] * 15, alg="a", problem=p))
    index.add(make_run_set([10] * 15, alg="b", problem=p))
    index.add(make_run_set([10] * 3, alg="c", problem=p))
    counts = admissible_counts(index, [p, ProblemKey(2, 5)])
    assert counts == {p: 2, ProblemKey(2, 5): 0}
