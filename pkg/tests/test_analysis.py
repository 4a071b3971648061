"""Window profiling and conflict pre-processing against per-cycle oracles."""

import numpy as np
import pytest

from xbarsynth.analysis import (
    AnalysisParams,
    WindowProfile,
    aggregate_overlap,
    preprocess,
    profile,
    validate_profile,
)
from xbarsynth.trace import Trace, Transaction

from oracles import cycle_profile, make_random_trace, target_occupancy, whole_trace_overlap


def test_two_target_example():
    # t_1 busy [0,10), t_2 busy [5,15), WS 10
    tr = Trace(1, 2, [Transaction(0, 10, 1, 1), Transaction(5, 10, 1, 2)])
    prof = profile(tr, 10)
    assert prof.num_windows == 2
    assert prof.comm[0].tolist() == [10, 0]
    assert prof.comm[1].tolist() == [5, 5]
    assert prof.wo[0, 1].tolist() == [5, 0]


def test_boundary_spanning_transaction():
    tr = Trace(1, 1, [Transaction(0, 10, 1, 1)])
    prof = profile(tr, 4)
    assert prof.comm[0].tolist() == [4, 4, 2]


def test_empty_trace():
    prof = profile(Trace(1, 3), 100)
    assert prof.num_windows == 0
    assert prof.comm.shape == (3, 0)
    assert prof.wo.shape == (3, 3, 0)


def test_same_target_concurrency_counts_once():
    # occupancy, not additive demand
    tr = Trace(2, 1, [Transaction(0, 6, 1, 1), Transaction(3, 6, 2, 1)])
    prof = profile(tr, 10)
    assert prof.comm[0, 0] == 9


def test_profile_matches_cycle_oracle():
    rng = np.random.Generator(np.random.PCG64(13))
    for _ in range(30):
        tr = make_random_trace(rng)
        ws = int(rng.integers(1, 80))
        prof = profile(tr, ws)
        comm, wo, crit_wo = cycle_profile(tr, ws)
        assert np.array_equal(prof.comm, comm)
        assert np.array_equal(prof.wo, wo)
        assert np.array_equal(prof.crit_wo, crit_wo)
        validate_profile(prof)


def test_partition_property():
    # windows tile the horizon: per-target comm sums equal whole-trace occupancy
    rng = np.random.Generator(np.random.PCG64(17))
    for _ in range(20):
        tr = make_random_trace(rng)
        ws = int(rng.integers(1, 50))
        prof = profile(tr, ws)
        assert np.array_equal(prof.comm.sum(axis=1), target_occupancy(tr))


def test_aggregate_overlap_equals_windowless_count():
    rng = np.random.Generator(np.random.PCG64(19))
    for _ in range(20):
        tr = make_random_trace(rng)
        ws = int(rng.integers(1, 50))
        om = aggregate_overlap(profile(tr, ws))
        assert np.array_equal(om, whole_trace_overlap(tr))
        assert np.array_equal(om, om.T)


def test_preprocess_threshold_example():
    tr = Trace(1, 2, [Transaction(0, 30, 1, 1), Transaction(0, 30, 1, 2)])
    prof = profile(tr, 100)
    assert prof.wo[0, 1, 0] == 30
    assert preprocess(prof, AnalysisParams(100, 0.25))[0, 1]  # 30 > 25
    assert not preprocess(prof, AnalysisParams(100, 0.30))[0, 1]  # 30 > 30 fails
    assert not preprocess(prof, AnalysisParams(100, 0.31))[0, 1]  # floor -> 31


def test_zero_overlap_never_conflicts():
    tr = Trace(1, 2, [Transaction(0, 10, 1, 1), Transaction(10, 10, 1, 2)])
    prof = profile(tr, 20)
    assert not preprocess(prof, AnalysisParams(20, 0.01)).any()


def test_critical_overlap_forces_conflict():
    tr = Trace(2, 4, [
        Transaction(0, 2, 1, 3, critical=True),
        Transaction(1, 2, 2, 4, critical=True),
    ])
    prof = profile(tr, 100)
    conflict = preprocess(prof, AnalysisParams(100, 0.5))
    assert conflict[2, 3] and conflict[3, 2]
    assert not conflict[0, 1]


def test_noncritical_overlap_below_threshold_is_free():
    tr = Trace(2, 2, [Transaction(0, 2, 1, 1), Transaction(1, 2, 2, 2)])
    prof = profile(tr, 100)
    assert not preprocess(prof, AnalysisParams(100, 0.5)).any()


def test_conflict_diagonal_zero_and_symmetric():
    rng = np.random.Generator(np.random.PCG64(23))
    for _ in range(10):
        tr = make_random_trace(rng)
        ws = int(rng.integers(1, 40))
        prof = profile(tr, ws)
        c = preprocess(prof, AnalysisParams(ws, 0.3))
        assert not c.diagonal().any()
        assert np.array_equal(c, c.T)


def test_theta_monotonicity():
    # lowering theta can only add conflict pairs
    rng = np.random.Generator(np.random.PCG64(29))
    for _ in range(10):
        tr = make_random_trace(rng, horizon=300, max_txs=30)
        ws = int(rng.integers(4, 40))
        prof = profile(tr, ws)
        thetas = [0.05, 0.1, 0.2, 0.3, 0.4, 0.5]
        counts = [preprocess(prof, AnalysisParams(ws, th)).sum() for th in thetas]
        assert counts == sorted(counts, reverse=True)
        prev = None
        for th in thetas:
            cur = preprocess(prof, AnalysisParams(ws, th))
            if prev is not None:
                assert (prev | cur == prev).all()  # cur is a subset of prev
            prev = cur


def test_params_validation():
    with pytest.raises(ValueError, match="0.5"):
        AnalysisParams(100, 0.6)
    with pytest.raises(ValueError):
        AnalysisParams(100, 0.0)
    with pytest.raises(ValueError):
        AnalysisParams(0, 0.3)
    with pytest.raises(ValueError):
        AnalysisParams(100, 0.3, max_targets_per_bus=0)
    with pytest.raises(ValueError, match="window size"):
        profile(Trace(1, 1), 0)


def test_preprocess_rejects_mismatched_window_size():
    prof = profile(Trace(1, 1, [Transaction(0, 5, 1, 1)]), 10)
    with pytest.raises(ValueError, match="window size"):
        preprocess(prof, AnalysisParams(20, 0.3))


def test_validate_profile_catches_tampering():
    prof = profile(Trace(1, 2, [Transaction(0, 10, 1, 1), Transaction(0, 10, 1, 2)]), 10)
    validate_profile(prof)
    bad = WindowProfile(prof.window_size, prof.num_windows,
                        prof.comm, prof.wo.copy(), prof.crit_wo)
    bad.wo[0, 1, 0] = 99  # exceeds min(comm) and breaks symmetry
    with pytest.raises(ValueError):
        validate_profile(bad)
