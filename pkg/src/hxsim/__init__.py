"""hxsim: cycle-level HyperX interconnection-network simulator.

Implements the SurePath fault-tolerant routing mechanism (adaptive routing
subnetwork plus an opportunistic Up/Down escape subnetwork), the baseline
routings it is compared against, synthetic traffic patterns, fault models
and the metrics pipeline.
"""

from hxsim.topology import HyperXTopology, LinkId, build_hyperx, UNREACHABLE

__all__ = ["HyperXTopology", "LinkId", "build_hyperx", "UNREACHABLE"]
__version__ = "0.1.0"
