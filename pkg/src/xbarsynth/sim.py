"""Cycle-level bus contention replay of a trace against a crossbar config.

Every transaction requests its target's bus at its start cycle.  A bus
serves one transaction at a time, non-preemptively, granting queued
requests in (arrival cycle, target_id, initiator_id) order; initiators are
connected to every bus and never contend among themselves.  Latency is
completion minus request start, so an uncontended transaction's latency
equals its duration; queuing delay (latency minus duration) is reported
separately as well.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .solver import CrossbarConfig, full_crossbar_config, shared_bus_config
from .trace import Trace


class SimulationError(ValueError):
    """Config does not cover the trace (missing target binding)."""


@dataclass
class SimReport:
    """Per-transaction latencies plus aggregate statistics."""

    per_transaction_latency: list[int]
    avg_latency: float
    max_latency: int
    avg_queuing: float
    per_target_avg: list[float]
    per_bus_utilization: list[float]
    dropped: int = 0

    def to_dict(self) -> dict:
        return {
            "avg_latency": self.avg_latency,
            "max_latency": self.max_latency,
            "avg_queuing": self.avg_queuing,
            "num_transactions": len(self.per_transaction_latency),
            "per_target_avg": self.per_target_avg,
            "per_bus_utilization": self.per_bus_utilization,
            "dropped": self.dropped,
        }


def simulate(trace: Trace, config: CrossbarConfig, grant_overhead: int = 0) -> SimReport:
    """Replay ``trace`` on ``config`` and measure per-transaction latency.

    ``grant_overhead`` adds a fixed bus-occupancy cost to every grant
    (defaults to zero: pure transfer time).
    """
    if config.num_targets < trace.num_targets:
        missing = config.num_targets + 1
        raise SimulationError(
            f"binding missing a referenced target: t_{missing} has no bus"
        )
    bus_free = [0] * config.num_buses
    bus_busy = [0] * config.num_buses
    latencies: list[int] = []
    tgt_sum = [0] * trace.num_targets
    tgt_cnt = [0] * trace.num_targets

    makespan = trace.horizon
    for tx in trace.transactions:  # already sorted in grant order
        k = config.binding[tx.target_id - 1] - 1
        begin = max(tx.start_cycle, bus_free[k])
        hold = grant_overhead + tx.duration
        completion = begin + hold
        bus_free[k] = completion
        bus_busy[k] += hold
        latency = completion - tx.start_cycle
        latencies.append(latency)
        tgt_sum[tx.target_id - 1] += latency
        tgt_cnt[tx.target_id - 1] += 1
        makespan = max(makespan, completion)

    n = len(latencies)
    avg = sum(latencies) / n if n else 0.0
    total_duration = sum(tx.duration for tx in trace.transactions)
    avg_queuing = (sum(latencies) - total_duration - n * grant_overhead) / n if n else 0.0
    per_target_avg = [
        tgt_sum[i] / tgt_cnt[i] if tgt_cnt[i] else 0.0 for i in range(trace.num_targets)
    ]
    utilization = [
        bus_busy[k] / makespan if makespan else 0.0 for k in range(config.num_buses)
    ]
    return SimReport(
        per_transaction_latency=latencies,
        avg_latency=avg,
        max_latency=max(latencies, default=0),
        avg_queuing=avg_queuing,
        per_target_avg=per_target_avg,
        per_bus_utilization=utilization,
    )


@dataclass
class CompareRow:
    """One line of the design-vs-baselines comparison table."""

    name: str
    num_buses: int
    avg_latency: float
    max_latency: int
    size_ratio: float

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "num_buses": self.num_buses,
            "avg_latency": self.avg_latency,
            "max_latency": self.max_latency,
            "size_ratio": self.size_ratio,
        }


def compare(trace: Trace, configs: list[tuple[str, CrossbarConfig]]) -> list[CompareRow]:
    """Simulate each named config; size ratios are bus counts normalized to
    the one-bus shared baseline (bus-count granularity only: arbiters and
    adapters of a real interconnect are not modeled)."""
    rows = []
    for name, config in configs:
        report = simulate(trace, config)
        rows.append(
            CompareRow(
                name=name,
                num_buses=config.num_buses,
                avg_latency=report.avg_latency,
                max_latency=report.max_latency,
                size_ratio=float(config.num_buses),
            )
        )
    return rows


def baseline_configs(num_targets: int) -> list[tuple[str, CrossbarConfig]]:
    """The two reference points: one shared bus, and one bus per target."""
    return [
        ("shared", shared_bus_config(num_targets)),
        ("full", full_crossbar_config(num_targets)),
    ]
