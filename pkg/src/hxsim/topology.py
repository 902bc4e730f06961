"""HyperX (Hamming graph) topologies with link faults and BFS distance tables.

A HyperX of sides (k_1, ..., k_n) has one switch per coordinate vector and
connects two switches iff their Hamming distance is 1.  Links can be removed
through a fault mask; all distance queries are answered on the faulted graph.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

Coordinates = tuple[int, ...]

#: Sentinel distance for unreachable switch pairs.
UNREACHABLE = 2**30


@dataclass(frozen=True, order=True)
class LinkId:
    """Undirected switch-to-switch link, endpoints as switch indices."""

    a: int
    b: int
    dim: int

    @staticmethod
    def of(a: int, b: int, dim: int) -> "LinkId":
        if a > b:
            a, b = b, a
        return LinkId(a, b, dim)


class HyperXTopology:
    """Switch fabric of a HyperX with a removable-link fault mask.

    Ports of each switch are numbered dimension-major: for dimension i the
    ports to coordinate values 0..k_i-1 (skipping the switch's own value)
    in ascending order, then the server ports last.
    """

    def __init__(self, sides: Sequence[int], servers_per_switch: int):
        if len(sides) == 0:
            raise ValueError("sides must be non-empty")
        if any(k < 2 for k in sides):
            raise ValueError(f"every side must be >= 2, got {list(sides)}")
        if servers_per_switch < 0:
            raise ValueError("servers_per_switch must be >= 0")
        self.sides = tuple(int(k) for k in sides)
        self.servers_per_switch = int(servers_per_switch)
        self.n_dims = len(self.sides)
        self.num_switches = math.prod(self.sides)
        self.switch_ports = sum(k - 1 for k in self.sides)
        self.radix = self.switch_ports + self.servers_per_switch
        self.num_servers = self.num_switches * self.servers_per_switch

        # coords[i] = coordinate vector of switch i (row-major, last dim fastest)
        self._strides = np.ones(self.n_dims, dtype=np.int64)
        for i in range(self.n_dims - 2, -1, -1):
            self._strides[i] = self._strides[i + 1] * self.sides[i + 1]
        self.coords = np.zeros((self.num_switches, self.n_dims), dtype=np.int32)
        idx = np.arange(self.num_switches)
        for i in range(self.n_dims):
            self.coords[:, i] = (idx // self._strides[i]) % self.sides[i]

        # port_dim[p] / port_value[p]: dimension and target coordinate slot
        # of switch port p.  port_value counts 0..k_i-2 within the dimension;
        # the actual neighbour coordinate depends on the switch's own value.
        self.port_dim = np.zeros(self.switch_ports, dtype=np.int32)
        self.port_slot = np.zeros(self.switch_ports, dtype=np.int32)
        p = 0
        for i, k in enumerate(self.sides):
            for s in range(k - 1):
                self.port_dim[p] = i
                self.port_slot[p] = s
                p += 1

        self.fault_mask: set[LinkId] = set()
        self._dist: np.ndarray | None = None
        self._neighbor_table: np.ndarray | None = None

    # -- indexing helpers ---------------------------------------------------

    def switch_index(self, x: Coordinates) -> int:
        self._check_coords(x)
        return int(np.dot(np.asarray(x, dtype=np.int64), self._strides))

    def switch_coords(self, i: int) -> Coordinates:
        return tuple(int(c) for c in self.coords[i])

    def _check_coords(self, x: Sequence[int]) -> None:
        if len(x) != self.n_dims:
            raise ValueError(f"coordinate length {len(x)} != dimension {self.n_dims}")
        for c, k in zip(x, self.sides):
            if not 0 <= c < k:
                raise ValueError(f"coordinate {tuple(x)} out of range for sides {self.sides}")

    def link_between(self, a: int, b: int) -> LinkId:
        """LinkId for the (fault-free) link between adjacent switches a, b."""
        diff = np.nonzero(self.coords[a] != self.coords[b])[0]
        if len(diff) != 1:
            raise ValueError(f"switches {a} and {b} are not Hamming-adjacent")
        return LinkId.of(a, b, int(diff[0]))

    def all_links(self) -> list[LinkId]:
        """Every switch-to-switch link of the fault-free topology, sorted."""
        links = []
        for a in range(self.num_switches):
            for dim in range(self.n_dims):
                stride = int(self._strides[dim])
                ca = int(self.coords[a, dim])
                for v in range(ca + 1, self.sides[dim]):
                    links.append(LinkId(a, a + (v - ca) * stride, dim))
        return sorted(links)

    # -- adjacency ----------------------------------------------------------

    @property
    def neighbor_table(self) -> np.ndarray:
        """num_switches x switch_ports array of neighbour ids, -1 if faulted."""
        if self._neighbor_table is None:
            tbl = np.full((self.num_switches, self.switch_ports), -1, dtype=np.int32)
            for a in range(self.num_switches):
                for p in range(self.switch_ports):
                    dim = int(self.port_dim[p])
                    slot = int(self.port_slot[p])
                    ca = int(self.coords[a, dim])
                    v = slot if slot < ca else slot + 1
                    b = a + (v - ca) * int(self._strides[dim])
                    if LinkId.of(a, b, dim) not in self.fault_mask:
                        tbl[a, p] = b
            self._neighbor_table = tbl
        return self._neighbor_table

    def neighbors(self, x: Coordinates) -> list[tuple[int, Coordinates]]:
        """Live (port, neighbour coordinates) pairs of switch x."""
        a = self.switch_index(x)
        row = self.neighbor_table[a]
        return [(p, self.switch_coords(int(b))) for p, b in enumerate(row) if b >= 0]

    def port_to(self, a: int, b: int) -> int:
        """Port of switch a that leads to adjacent switch b (ignores faults)."""
        diff = np.nonzero(self.coords[a] != self.coords[b])[0]
        if len(diff) != 1:
            raise ValueError(f"switches {a} and {b} are not Hamming-adjacent")
        dim = int(diff[0])
        v = int(self.coords[b, dim])
        ca = int(self.coords[a, dim])
        slot = v if v < ca else v - 1
        base = sum(k - 1 for k in self.sides[:dim])
        return base + slot

    # -- faults -------------------------------------------------------------

    def apply_faults(self, faults: Iterable[LinkId]) -> None:
        """Remove the given links; invalidates cached adjacency/distances."""
        faults = list(faults)
        for f in faults:
            if not (0 <= f.a < self.num_switches and 0 <= f.b < self.num_switches):
                raise ValueError(f"{f} names a non-existent switch")
            diff = np.nonzero(self.coords[f.a] != self.coords[f.b])[0]
            if len(diff) != 1 or int(diff[0]) != f.dim:
                raise ValueError(f"{f} is not a link of this topology")
        self.fault_mask.update(faults)
        self._dist = None
        self._neighbor_table = None

    def clear_faults(self) -> None:
        self.fault_mask.clear()
        self._dist = None
        self._neighbor_table = None

    @property
    def link_count(self) -> int:
        """Number of live switch-to-switch links."""
        return self.num_switches * self.switch_ports // 2 - len(self.fault_mask)

    # -- distances ----------------------------------------------------------

    @property
    def distance_matrix(self) -> np.ndarray:
        """All-pairs hop counts on the faulted graph, UNREACHABLE where cut."""
        if self._dist is None:
            tbl = self.neighbor_table
            rows = np.repeat(np.arange(self.num_switches), self.switch_ports)
            cols = tbl.ravel()
            live = cols >= 0
            m = csr_matrix(
                (np.ones(live.sum(), dtype=np.int8), (rows[live], cols[live])),
                shape=(self.num_switches, self.num_switches),
            )
            d = shortest_path(m, method="D", unweighted=True)
            out = np.full(d.shape, UNREACHABLE, dtype=np.int32)
            finite = np.isfinite(d)
            out[finite] = d[finite].astype(np.int32)
            self._dist = out
        return self._dist

    def bfs_distances(self, source: Coordinates) -> np.ndarray:
        """Hop counts from source to every switch (UNREACHABLE if cut off)."""
        return self.distance_matrix[self.switch_index(source)]

    def is_connected(self) -> bool:
        return not (self.distance_matrix >= UNREACHABLE).any()

    def diameter(self) -> int | float:
        """Largest pairwise distance; math.inf when disconnected."""
        d = self.distance_matrix
        if (d >= UNREACHABLE).any():
            return math.inf
        return int(d.max())

    def average_distance(self) -> Fraction | float:
        """Mean distance over all ordered pairs, self-pairs included."""
        d = self.distance_matrix
        if (d >= UNREACHABLE).any():
            return math.inf
        return Fraction(int(d.sum(dtype=np.int64)), self.num_switches**2)

    def __repr__(self) -> str:
        s = "x".join(str(k) for k in self.sides)
        return f"HyperXTopology({s}, servers={self.servers_per_switch}, faults={len(self.fault_mask)})"


def build_hyperx(sides: Sequence[int], servers_per_switch: int) -> HyperXTopology:
    """Construct a fault-free HyperX with the given sides."""
    return HyperXTopology(sides, servers_per_switch)
