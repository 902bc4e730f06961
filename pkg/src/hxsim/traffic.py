"""Synthetic traffic patterns.

Servers are numbered switch-major: server id = switch * servers_per_switch
+ local index w.  All permutation patterns resolve to a fixed destination
table; Uniform draws a fresh destination per packet inside the engine.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from hxsim.topology import HyperXTopology

#: Directed Hamiltonian cycle on the K_2^3 block hypercube, as coordinate
#: parity triples, in reflected-binary (Gray code) order.
GRAY_CYCLE = [
    (0, 0, 0), (0, 0, 1), (0, 1, 1), (0, 1, 0),
    (1, 1, 0), (1, 1, 1), (1, 0, 1), (1, 0, 0),
]


class PatternKind(enum.Enum):
    UNIFORM = "uniform"
    SERVER_PERM = "server_perm"
    DCR = "dcr"
    RPN = "rpn"


@dataclass
class TrafficPattern:
    kind: PatternKind
    #: destination server per source server, or None for Uniform.
    table: np.ndarray | None
    seed: int | None = None


def server_id(topo: HyperXTopology, switch: int, w: int) -> int:
    return switch * topo.servers_per_switch + w


def uniform_dest(source: int, num_servers: int, rng: np.random.Generator) -> int:
    """Uniform over all servers except the source."""
    if num_servers < 2:
        raise ValueError("uniform traffic needs at least 2 servers")
    d = int(rng.integers(num_servers - 1))
    return d + 1 if d >= source else d


def random_server_permutation(topo: HyperXTopology, seed: int) -> TrafficPattern:
    """A uniformly random permutation of the servers, fixed for the run."""
    rng = np.random.default_rng(seed)
    table = rng.permutation(topo.num_servers).astype(np.int64)
    return TrafficPattern(PatternKind.SERVER_PERM, table, seed)


def dim_complement_reverse(topo: HyperXTopology) -> TrafficPattern:
    """Complement-and-reverse the coordinates.

    3D: switch (x, y, z) sends to switch (k-1-z, k-1-y, k-1-x), keeping the
    server index.  2D: the server index acts as a third coordinate, so
    server (w, x, y) sends to server (k-1-y, k-1-x, k-1-w).
    """
    k = topo.sides[0]
    s = topo.servers_per_switch
    if topo.n_dims == 3:
        if len(set(topo.sides)) != 1:
            raise ValueError("3D dimension complement reverse needs equal sides")
        table = np.empty(topo.num_servers, dtype=np.int64)
        for sw in range(topo.num_switches):
            x, y, z = topo.switch_coords(sw)
            dest = topo.switch_index((k - 1 - z, k - 1 - y, k - 1 - x))
            for w in range(s):
                table[server_id(topo, sw, w)] = server_id(topo, dest, w)
    elif topo.n_dims == 2:
        if topo.sides[0] != topo.sides[1] or s != k:
            raise ValueError(
                "2D dimension complement reverse needs servers_per_switch == side"
            )
        table = np.empty(topo.num_servers, dtype=np.int64)
        for sw in range(topo.num_switches):
            x, y = topo.switch_coords(sw)
            for w in range(s):
                # (w, x, y) -> (k-1-y, k-1-x, k-1-w): new switch (x', y'),
                # new server index w'.
                dest_sw = topo.switch_index((k - 1 - x, k - 1 - w))
                table[server_id(topo, sw, w)] = server_id(topo, dest_sw, k - 1 - y)
    else:
        raise ValueError("dimension complement reverse is defined for 2D and 3D")
    return TrafficPattern(PatternKind.DCR, table)


def rpn_switch_permutation(sides: tuple[int, ...]) -> np.ndarray:
    """Regular Permutation to Neighbour switch permutation for a 3D HyperX.

    The switch grid is partitioned into (k/2)^3 blocks of 2x2x2 switches;
    within each block every switch maps to its successor on the fixed Gray
    Hamiltonian cycle of the K_2^3 hypercube.  Source and destination are
    always Hamming-distance-1 apart.
    """
    if len(sides) != 3 or len(set(sides)) != 1:
        raise ValueError("regular permutation to neighbour needs a k x k x k HyperX")
    k = sides[0]
    if k % 2:
        raise ValueError("regular permutation to neighbour needs an even side")
    succ = {GRAY_CYCLE[i]: GRAY_CYCLE[(i + 1) % 8] for i in range(8)}
    n = k * k * k
    perm = np.empty(n, dtype=np.int64)
    for idx in range(n):
        x, y, z = idx // (k * k), (idx // k) % k, idx % k
        bits = (x % 2, y % 2, z % 2)
        nx_, ny, nz = succ[bits]
        dx, dy, dz = x - x % 2 + nx_, y - y % 2 + ny, z - z % 2 + nz
        perm[idx] = (dx * k + dy) * k + dz
    return perm


def regular_perm_to_neighbour(topo: HyperXTopology) -> TrafficPattern:
    perm = rpn_switch_permutation(topo.sides)
    s = topo.servers_per_switch
    table = np.empty(topo.num_servers, dtype=np.int64)
    for sw in range(topo.num_switches):
        for w in range(s):
            table[server_id(topo, sw, w)] = server_id(topo, int(perm[sw]), w)
    return TrafficPattern(PatternKind.RPN, table)


def make_pattern(
    kind: str | PatternKind, topo: HyperXTopology, seed: int | None = None
) -> TrafficPattern:
    kind = PatternKind(kind) if not isinstance(kind, PatternKind) else kind
    if kind is PatternKind.UNIFORM:
        return TrafficPattern(PatternKind.UNIFORM, None, seed)
    if kind is PatternKind.SERVER_PERM:
        return random_server_permutation(topo, 0 if seed is None else seed)
    if kind is PatternKind.DCR:
        return dim_complement_reverse(topo)
    return regular_perm_to_neighbour(topo)


def verify_admissible(pattern: TrafficPattern, topo: HyperXTopology) -> bool:
    """True iff no server is the destination of more than one persistent flow."""
    if pattern.table is None:
        return True
    counts = np.bincount(pattern.table, minlength=topo.num_servers)
    return bool((counts <= 1).all())
