"""Transaction trace data model, CSV ingestion and validation.

A trace records timed transfers between initiators (masters) and targets
(slaves).  On disk a row always names the two cores by *role*:
``initiator_id`` is the master, ``target_id`` the slave, and ``direction``
says which way the data moves (``req``: master to slave, ``resp``: slave to
master).  Loading with ``direction="resp"`` swaps the roles so that the
receiving masters become the analyzed "targets"; the rest of the toolkit
then designs the reverse crossbar with the exact same machinery.

File format (UTF-8 CSV)::

    #xbar-trace v1,initiators=<n>,targets=<n>
    start_cycle,duration,initiator_id,target_id,direction,critical

Ids are 1-based.  Lines starting with ``#`` are comments.  Busy intervals
are half-open: a transaction occupies [start, start + duration).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

REQUEST = "req"
RESPONSE = "resp"
DIRECTIONS = (REQUEST, RESPONSE)

_HEADER_RE = re.compile(r"^#xbar-trace v1,initiators=(\d+),targets=(\d+)\s*$")


class TraceError(ValueError):
    """Raised for malformed trace files or invalid trace contents."""


@dataclass(frozen=True)
class Transaction:
    """One atomic transfer occupying its target for [start, start+duration)."""

    start_cycle: int
    duration: int
    initiator_id: int
    target_id: int
    critical: bool = False
    direction: str = REQUEST

    @property
    def end_cycle(self) -> int:
        return self.start_cycle + self.duration

    def sort_key(self) -> tuple[int, int, int]:
        return (self.start_cycle, self.target_id, self.initiator_id)


@dataclass
class Trace:
    """A validated, sorted collection of transactions.

    ``horizon`` defaults to the last busy cycle (max start+duration) but can
    be overridden, e.g. by a generator that knows the intended run length.
    """

    num_initiators: int
    num_targets: int
    transactions: list[Transaction] = field(default_factory=list)
    horizon: int | None = None

    def __post_init__(self) -> None:
        if self.num_initiators < 1 or self.num_targets < 1:
            raise TraceError("core counts must be positive")
        self.transactions = sorted(self.transactions, key=Transaction.sort_key)
        for tx in self.transactions:
            _check_transaction(tx, self.num_initiators, self.num_targets)
        derived = max((tx.end_cycle for tx in self.transactions), default=0)
        if self.horizon is None:
            self.horizon = derived
        elif self.horizon < derived:
            raise TraceError(
                f"horizon {self.horizon} shorter than last transaction end {derived}"
            )

def _check_transaction(tx: Transaction, num_initiators: int, num_targets: int) -> None:
    if tx.duration < 1:
        raise TraceError(f"non-positive duration {tx.duration}")
    if tx.start_cycle < 0:
        raise TraceError(f"negative start cycle {tx.start_cycle}")
    if not 1 <= tx.initiator_id <= num_initiators:
        raise TraceError(
            f"initiator id {tx.initiator_id} outside 1..{num_initiators}"
        )
    if not 1 <= tx.target_id <= num_targets:
        raise TraceError(f"target id {tx.target_id} outside 1..{num_targets}")
    if tx.direction not in DIRECTIONS:
        raise TraceError(f"unknown direction {tx.direction!r}")


def load_trace(path: str | Path, direction: str = REQUEST) -> Trace:
    """Parse a trace file, keeping only rows moving in ``direction``.

    For ``direction="resp"`` the initiator/target roles (and the declared
    core counts) are swapped in the returned trace, so downstream analysis
    always binds the *receivers* of the selected flow to buses.
    """
    if direction not in DIRECTIONS:
        raise TraceError(f"direction must be one of {DIRECTIONS}, got {direction!r}")
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise TraceError(f"{path}: empty file, missing header")
    m = _HEADER_RE.match(lines[0])
    if not m:
        raise TraceError(f"{path}:1: bad header, expected '#xbar-trace v1,initiators=<n>,targets=<n>'")
    num_initiators, num_targets = int(m.group(1)), int(m.group(2))

    transactions = []
    for lineno, line in enumerate(lines[1:], start=2):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 6:
            raise TraceError(f"{path}:{lineno}: expected 6 fields, got {len(parts)}")
        try:
            start, dur, init_id, tgt_id = (int(p) for p in parts[:4])
        except ValueError as exc:
            raise TraceError(f"{path}:{lineno}: {exc}") from None
        row_dir = parts[4]
        if row_dir not in DIRECTIONS:
            raise TraceError(f"{path}:{lineno}: direction must be req or resp, got {row_dir!r}")
        if parts[5] not in ("0", "1"):
            raise TraceError(f"{path}:{lineno}: critical must be 0 or 1, got {parts[5]!r}")
        if dur < 1:
            raise TraceError(f"{path}:{lineno}: non-positive duration at line {lineno}")
        if start < 0:
            raise TraceError(f"{path}:{lineno}: negative start cycle")
        if not 1 <= init_id <= num_initiators:
            raise TraceError(
                f"{path}:{lineno}: initiator id {init_id} outside declared 1..{num_initiators}"
            )
        if not 1 <= tgt_id <= num_targets:
            raise TraceError(
                f"{path}:{lineno}: target id {tgt_id} outside declared 1..{num_targets}"
            )
        if row_dir != direction:
            continue
        if direction == RESPONSE:
            init_id, tgt_id = tgt_id, init_id
        transactions.append(
            Transaction(start, dur, init_id, tgt_id, parts[5] == "1", row_dir)
        )

    if direction == RESPONSE:
        num_initiators, num_targets = num_targets, num_initiators
    return Trace(num_initiators, num_targets, transactions)


def save_trace(trace: Trace, path: str | Path) -> None:
    """Write a trace back to the CSV format accepted by :func:`load_trace`.

    Response transactions are written back in role frame (master column
    first), undoing the swap done at load time, so a save/load round trip
    with the same direction reproduces the trace.  Note the header carries
    no horizon: an overridden horizon reverts to the derived one on reload.
    """
    directions = {tx.direction for tx in trace.transactions}
    if len(directions) > 1:
        raise TraceError("cannot serialize a trace mixing req and resp transactions")
    swapped = directions == {RESPONSE}
    n_init, n_tgt = trace.num_initiators, trace.num_targets
    if swapped:
        n_init, n_tgt = n_tgt, n_init
    out = [f"#xbar-trace v1,initiators={n_init},targets={n_tgt}"]
    for tx in trace.transactions:
        init_id, tgt_id = tx.initiator_id, tx.target_id
        if swapped:
            init_id, tgt_id = tgt_id, init_id
        out.append(
            f"{tx.start_cycle},{tx.duration},{init_id},{tgt_id},"
            f"{tx.direction},{1 if tx.critical else 0}"
        )
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")


@dataclass(frozen=True)
class TraceStats:
    """Per-target demand totals used for average-bandwidth baseline sizing."""

    per_target_busy: list[int]
    per_target_count: list[int]
    horizon: int

    @property
    def total_busy(self) -> int:
        return sum(self.per_target_busy)


def trace_stats(trace: Trace) -> TraceStats:
    """Sum per-target durations and transaction counts.

    These are additive demand totals (concurrent same-target transfers both
    count), unlike the occupancy counting done by window analysis.
    """
    busy = [0] * trace.num_targets
    count = [0] * trace.num_targets
    for tx in trace.transactions:
        busy[tx.target_id - 1] += tx.duration
        count[tx.target_id - 1] += 1
    return TraceStats(busy, count, trace.horizon)
