"""Performance metrics: throughput, latency, Jain fairness, completion series."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class MetricsRecord:
    """One simulation's measured outputs.

    throughput is normalized so 1.0 means one phit consumed per server per
    cycle; latency is creation-to-tail-ejection in cycles; jain is computed
    over the per-server generated load (source queues are unbounded, so
    generation is independent of admission).
    """

    throughput: float
    latency: float
    jain: float | None
    forced_hops: int
    escape_hops: int
    cycles: int
    delivered_packets: int
    #: head-of-queue route computations that produced an empty candidate set
    unroutable: int = 0
    time_series: list[tuple[int, float]] | None = None
    completion_cycle: int | None = None


def jain_index(loads) -> float | None:
    """(sum x)^2 / (n * sum x^2); None for an all-zero vector."""
    x = np.asarray(loads, dtype=np.float64)
    if x.ndim != 1 or len(x) == 0:
        raise ValueError("loads must be a non-empty vector")
    if (x < 0).any():
        raise ValueError("loads must be non-negative")
    sq = float((x * x).sum())
    if sq == 0.0:
        return None
    return float(x.sum()) ** 2 / (len(x) * sq)


def accepted_throughput(consumed_phits: int, servers: int, cycles: int) -> float:
    """Phits consumed per server per cycle."""
    if cycles <= 0:
        raise ValueError("cycles must be positive")
    return consumed_phits / (servers * cycles)


def completion_series(
    consumed_per_bucket, bucket_size: int, servers: int
) -> list[tuple[int, float]]:
    """Per-bucket accepted throughput for a finite-workload run."""
    out = []
    for i, phits in enumerate(consumed_per_bucket):
        out.append((i * bucket_size, phits / (servers * bucket_size)))
    return out
