"""High-level simulation driver: configuration in, MetricsRecord out.

Builds the topology, escape network, traffic tables and the kernel state,
runs the cycle loop and reduces the counters to metrics.  The kernel itself
lives in hxsim._kernel (compiled when available, see hxsim.core).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from hxsim import core
from hxsim.escape import EscapeNetwork, verify_escape_acyclic
from hxsim.metrics import MetricsRecord, completion_series, jain_index
from hxsim.surepath import DEFAULT_PENALTIES
from hxsim.topology import Coordinates, HyperXTopology, LinkId
from hxsim.traffic import PatternKind, make_pattern

ROUTINGS = {
    "minimal": 0,
    "dor": 1,
    "valiant": 2,
    "omni": 3,
    "polarized": 4,
    "omni_sp": 5,
    "pol_sp": 6,
}

#: Kernel error codes raised as exceptions.
_ERRORS = {
    10: "polarized weight function decreased",
    11: "polarized route length bound exceeded",
    12: "omnidimensional deroute budget exceeded",
    13: "omnidimensional route length bound exceeded",
    20: "input buffer overflow",
    21: "output port budget overflow",
    22: "link credit conservation violated",
    23: "server credit conservation violated",
    24: "packet conservation violated",
    30: "network stalled (deadlock detector fired)",
    31: "completion drain limit exceeded",
    32: "drain limit exceeded",
}


class SimulationError(RuntimeError):
    def __init__(self, code: int, stats: dict):
        super().__init__(f"kernel error {code}: {_ERRORS.get(code, 'unknown')}")
        self.code = code
        self.stats = stats


class DeadlockError(SimulationError):
    pass


@dataclass
class SimConfig:
    """One simulation run's parameters."""

    sides: tuple[int, ...]
    servers_per_switch: int
    routing: str = "pol_sp"
    pattern: str = "uniform"
    load: float | Fraction = 0.5
    seed: int = 1
    num_vcs: int | None = None
    omni_m: int | None = None
    pattern_seed: int | None = None
    warmup: int = 20_000
    measure: int = 20_000
    faults: frozenset[LinkId] | set[LinkId] | None = None
    escape_root: Coordinates | None = None
    penalties: dict[str, int] | None = None
    deadlock_limit: int = 10_000
    debug: bool = False
    verify_escape: bool = False
    pure: bool = False


def default_vcs(config: SimConfig, topo: HyperXTopology) -> int:
    """VC count implied by the routing's ladder / subnetwork split."""
    n = topo.n_dims
    diam = topo.diameter()
    diam = n if diam == float("inf") else int(diam)
    r = config.routing
    if r == "minimal":
        return max(1, (diam + 1) // 2)
    if r == "dor":
        return 1
    if r in ("valiant", "polarized"):
        return 2 * diam
    if r == "omni":
        m = n if config.omni_m is None else config.omni_m
        return n + m
    # SurePath: routing VCs plus one escape VC
    return 4


def _reverse_ports(topo: HyperXTopology) -> np.ndarray:
    """nbr_port[a, p] = port of neighbour(a, p) that leads back to a."""
    n, psw = topo.num_switches, topo.switch_ports
    out = np.full((n, psw), -1, dtype=np.intc)
    base = np.zeros(topo.n_dims, dtype=np.int64)
    for d in range(1, topo.n_dims):
        base[d] = base[d - 1] + topo.sides[d - 1] - 1
    for p in range(psw):
        d = int(topo.port_dim[p])
        ca = topo.coords[:, d].astype(np.int64)
        slot = int(topo.port_slot[p])
        v = np.where(slot < ca, slot, slot + 1)
        back = np.where(ca < v, ca, ca - 1)
        out[:, p] = (base[d] + back).astype(np.intc)
    return out


def _port_values(topo: HyperXTopology) -> np.ndarray:
    """port_val[a, p] = coordinate value of the neighbour behind port p."""
    n, psw = topo.num_switches, topo.switch_ports
    out = np.empty((n, psw), dtype=np.intc)
    for p in range(psw):
        d = int(topo.port_dim[p])
        slot = int(topo.port_slot[p])
        ca = topo.coords[:, d]
        out[:, p] = np.where(slot < ca, slot, slot + 1)
    return out


def _load_fraction(load: float | Fraction) -> tuple[int, int]:
    f = Fraction(load).limit_denominator(1_000_000)
    if not 0 <= f <= 1:
        raise ValueError(f"load must be in [0, 1], got {load}")
    return f.numerator, f.denominator


def build_topology(config: SimConfig) -> HyperXTopology:
    topo = HyperXTopology(config.sides, config.servers_per_switch)
    if config.faults:
        topo.apply_faults(config.faults)
    return topo


def build_sim(config: SimConfig):
    """Construct (topology, escape_network_or_None, kernel Sim)."""
    topo = build_topology(config)
    if topo.servers_per_switch < 1:
        raise ValueError("simulation needs at least one server per switch")
    algo = ROUTINGS[config.routing]
    surepath = algo >= 5
    num_vcs = config.num_vcs or default_vcs(config, topo)
    if surepath and num_vcs < 2:
        raise ValueError("SurePath needs at least one routing VC plus the escape VC")
    omni_m = topo.n_dims if config.omni_m is None else config.omni_m

    n = topo.num_switches
    esc = None
    if surepath:
        root = config.escape_root or (0,) * topo.n_dims
        esc = EscapeNetwork(topo, root, config.penalties)
        if config.verify_escape:
            ok, witness = verify_escape_acyclic(esc)
            if not ok:
                raise RuntimeError(f"escape network is cyclic: {witness}")
        level = np.ascontiguousarray(esc.level, dtype=np.intc)
        ud = np.ascontiguousarray(esc.ud, dtype=np.intc)
    else:
        if not topo.is_connected():
            raise ValueError(
                "faulted topology is disconnected; only SurePath routes around "
                "that (within the escape root's component)"
            )
        level = np.zeros(n, dtype=np.intc)
        ud = np.zeros((n, n), dtype=np.intc)

    pattern = make_pattern(config.pattern, topo, config.pattern_seed)
    if pattern.table is None:
        dest_table = np.empty(0, dtype=np.int64)
    else:
        dest_table = np.ascontiguousarray(pattern.table, dtype=np.int64)

    pens = dict(DEFAULT_PENALTIES)
    if config.penalties:
        pens.update(config.penalties)
    load_num, load_den = _load_fraction(config.load)
    diam = topo.diameter()
    diam2 = 2**28 if diam == float("inf") else 2 * int(diam)

    kernel = core.load_kernel(config.pure)
    sim = kernel.Sim(
        np.ascontiguousarray(topo.neighbor_table, dtype=np.intc),
        _reverse_ports(topo),
        np.ascontiguousarray(topo.port_dim, dtype=np.intc),
        _port_values(topo),
        np.ascontiguousarray(topo.coords, dtype=np.intc),
        np.ascontiguousarray(topo.distance_matrix, dtype=np.intc),
        level,
        ud,
        None,
        topo.servers_per_switch,
        num_vcs,
        algo,
        omni_m,
        dest_table,
        pens["deroute"],
        np.array([pens["minimal"], pens["polar1"], pens["polar2"]], dtype=np.intc),
        pens["up"],
        pens["down"],
        np.array([pens["short1"], pens["short2"], pens["short3"]], dtype=np.intc),
        config.seed,
        load_num,
        load_den,
        config.deadlock_limit,
        diam2,
        1 if config.debug else 0,
    )
    return topo, esc, sim


def _raise_on_error(rc: int, stats: dict) -> None:
    if rc == 0:
        return
    if rc == 30:
        raise DeadlockError(rc, stats)
    raise SimulationError(rc, stats)


def _reduce(stats: dict, servers: int, cycles: int) -> MetricsRecord:
    lat = stats["lat_sum"] / stats["lat_n"] if stats["lat_n"] else float("nan")
    return MetricsRecord(
        throughput=stats["consumed_meas"] / (servers * cycles) if cycles else 0.0,
        latency=lat,
        jain=jain_index(stats["srv_gen"]),
        forced_hops=stats["forced_hops"],
        escape_hops=stats["escape_hops"],
        cycles=cycles,
        delivered_packets=stats["delivered"],
        unroutable=stats["unroutable"],
    )


def run(config: SimConfig) -> MetricsRecord:
    """Open-loop run: warmup, then a measured window at the offered load."""
    topo, _, sim = build_sim(config)
    rc = sim.run_rate(config.warmup, config.measure)
    stats = sim.stats()
    _raise_on_error(rc, stats)
    return _reduce(stats, topo.num_servers, config.measure)


def run_completion(
    config: SimConfig,
    packets_per_server: int,
    bucket: int = 256,
    drain_limit: int = 5_000_000,
) -> MetricsRecord:
    """Closed workload: every server sends a fixed batch, run to drain."""
    topo, _, sim = build_sim(config)
    rc, cycle, buckets = sim.run_completion(packets_per_server, drain_limit, bucket)
    stats = sim.stats()
    _raise_on_error(rc, stats)
    rec = _reduce(stats, topo.num_servers, cycle)
    rec.completion_cycle = cycle
    rec.time_series = completion_series(buckets, bucket, topo.num_servers)
    return rec
