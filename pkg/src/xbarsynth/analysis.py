"""Window-based traffic profiling and conflict pre-processing.

The horizon is tiled with fixed-size windows; window m covers cycles
[m*WS, (m+1)*WS).  For every target we count per-window busy cycles
(occupancy: concurrent transfers to one target count once per cycle) and
for every target pair the cycles where both are busy at once.  Summing the
pairwise overlaps over all windows gives the overlap matrix that drives
binding optimization; thresholding per-window overlaps (plus any overlap
between critical streams) gives the conflict matrix of pairs that must not
share a bus.

Implementation note: profiles are computed from merged busy intervals with
integer window clipping, never by stepping individual cycles, so the test
suite's per-cycle oracle is an independent check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .trace import Trace

Intervals = list[tuple[int, int]]


@dataclass
class AnalysisParams:
    """Knobs of the analysis/pre-processing stage.

    ``overlap_threshold`` is a fraction of the window size; above 0.5 the
    pair could not share a bus anyway (its busy cycles alone would exceed
    the window), so larger values are rejected.  ``max_targets_per_bus``
    of None means unconstrained.
    """

    window_size: int
    overlap_threshold: float = 0.3
    max_targets_per_bus: int | None = None

    def __post_init__(self) -> None:
        if self.window_size < 1:
            raise ValueError("window size must be >= 1 cycle")
        if not 0.0 < self.overlap_threshold <= 0.5:
            raise ValueError(
                f"overlap threshold must be in (0, 0.5], got {self.overlap_threshold}"
                " (pairs overlapping more than 50% of a window cannot share a bus)"
            )
        if self.max_targets_per_bus is not None and self.max_targets_per_bus < 1:
            raise ValueError("max targets per bus must be >= 1")


@dataclass
class WindowProfile:
    """Per-window busy cycles and pairwise overlaps.

    comm[i, m]     busy cycles of target i+1 in window m
    wo[i, j, m]    cycles in window m where targets i+1 and j+1 are both busy
    crit_wo[i, j, m]  same, counting only critical-critical co-activity
    """

    window_size: int
    num_windows: int
    comm: np.ndarray
    wo: np.ndarray
    crit_wo: np.ndarray

    @property
    def num_targets(self) -> int:
        return self.comm.shape[0]


def _merge_intervals(intervals: Intervals) -> Intervals:
    """Merge possibly-overlapping half-open intervals into disjoint ones."""
    merged: Intervals = []
    for start, end in sorted(intervals):
        if merged and start <= merged[-1][1]:
            if end > merged[-1][1]:
                merged[-1] = (merged[-1][0], end)
        else:
            merged.append((start, end))
    return merged


def _intersect(a: Intervals, b: Intervals) -> Intervals:
    """Intersect two disjoint sorted interval lists (two-pointer sweep)."""
    out: Intervals = []
    ia = ib = 0
    while ia < len(a) and ib < len(b):
        lo = max(a[ia][0], b[ib][0])
        hi = min(a[ia][1], b[ib][1])
        if lo < hi:
            out.append((lo, hi))
        if a[ia][1] <= b[ib][1]:
            ia += 1
        else:
            ib += 1
    return out


def _scatter_into_windows(intervals: Intervals, window_size: int, row: np.ndarray) -> None:
    """Add each interval's per-window cycle counts into ``row``."""
    for start, end in intervals:
        w = start // window_size
        last = (end - 1) // window_size
        while w <= last:
            lo = max(start, w * window_size)
            hi = min(end, (w + 1) * window_size)
            row[w] += hi - lo
            w += 1


def profile(trace: Trace, window_size: int) -> WindowProfile:
    """Compute the per-window occupancy and overlap profile of a trace."""
    if window_size < 1:
        raise ValueError("window size must be >= 1 cycle")
    n = trace.num_targets
    num_windows = math.ceil(trace.horizon / window_size)

    busy: list[Intervals] = [[] for _ in range(n)]
    crit_busy: list[Intervals] = [[] for _ in range(n)]
    for tx in trace.transactions:
        busy[tx.target_id - 1].append((tx.start_cycle, tx.end_cycle))
        if tx.critical:
            crit_busy[tx.target_id - 1].append((tx.start_cycle, tx.end_cycle))
    busy = [_merge_intervals(iv) for iv in busy]
    crit_busy = [_merge_intervals(iv) for iv in crit_busy]

    comm = np.zeros((n, num_windows), dtype=np.int64)
    wo = np.zeros((n, n, num_windows), dtype=np.int64)
    crit_wo = np.zeros((n, n, num_windows), dtype=np.int64)
    for i in range(n):
        _scatter_into_windows(busy[i], window_size, comm[i])
        wo[i, i] = comm[i]
        _scatter_into_windows(crit_busy[i], window_size, crit_wo[i, i])
        for j in range(i + 1, n):
            _scatter_into_windows(_intersect(busy[i], busy[j]), window_size, wo[i, j])
            wo[j, i] = wo[i, j]
            _scatter_into_windows(
                _intersect(crit_busy[i], crit_busy[j]), window_size, crit_wo[i, j]
            )
            crit_wo[j, i] = crit_wo[i, j]

    return WindowProfile(window_size, num_windows, comm, wo, crit_wo)


def aggregate_overlap(prof: WindowProfile) -> np.ndarray:
    """Sum pairwise overlaps over all windows into the overlap matrix."""
    return prof.wo.sum(axis=2)


def preprocess(prof: WindowProfile, params: AnalysisParams) -> np.ndarray:
    """Derive the boolean conflict matrix of pairs forbidden to share a bus.

    A pair conflicts when its overlap in any single window strictly exceeds
    floor(threshold * WS) cycles, or when its critical streams are ever
    simultaneously active.  The diagonal is always zero.
    """
    if params.window_size != prof.window_size:
        raise ValueError(
            f"params window size {params.window_size} != profile window size {prof.window_size}"
        )
    threshold_cycles = int(params.overlap_threshold * prof.window_size)
    conflict = (prof.wo > threshold_cycles).any(axis=2) | (prof.crit_wo > 0).any(axis=2)
    np.fill_diagonal(conflict, False)
    return conflict


def validate_profile(prof: WindowProfile) -> None:
    """Check the structural invariants of a profile; raise on violation."""
    ws = prof.window_size
    if (prof.comm < 0).any() or (prof.comm > ws).any():
        raise ValueError("comm entries must lie in [0, WS]")
    if not np.array_equal(prof.wo, prof.wo.transpose(1, 0, 2)):
        raise ValueError("wo must be symmetric in the target pair")
    mins = np.minimum(prof.comm[:, None, :], prof.comm[None, :, :])
    if (prof.wo > mins).any():
        raise ValueError("wo[i,j,m] must not exceed min(comm[i,m], comm[j,m])")
    for i in range(prof.num_targets):
        if not np.array_equal(prof.wo[i, i], prof.comm[i]):
            raise ValueError("wo diagonal must equal comm")
    if (prof.crit_wo > prof.wo).any():
        raise ValueError("crit_wo must not exceed wo")
