"""Rooted Up/Down escape subnetwork with opportunistic shortcuts.

Links are coloured by the BFS level from a root switch: a link whose
endpoints sit at different levels is Black (Up/Down), a link between
same-level switches is Red (horizontal).  The Up/Down distance between two
switches is the shortest path that first strictly descends in level and
then strictly ascends, over Black links only.  Red links are offered
opportunistically whenever crossing them strictly reduces the Up/Down
distance to the target, which is what keeps the subnetwork's throughput
usable instead of tree-bound.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum

import networkx as nx
import numpy as np

from hxsim.topology import Coordinates, HyperXTopology, UNREACHABLE

#: Penalty schedule in phits: Up moves are costliest (they congest the
#: root), Down moves next, shortcuts cheapen with their Up/Down reduction.
DEFAULT_ESCAPE_PENALTIES = {
    "up": 112,
    "down": 96,
    "short1": 80,
    "short2": 64,
    "short3": 48,
}


class EscapeKind(Enum):
    UP = "up"
    DOWN = "down"
    SHORTCUT = "shortcut"


@dataclass(frozen=True)
class EscapeCandidate:
    port: int
    neighbor: int
    ud_reduction: int
    kind: EscapeKind
    penalty: int


def shortcut_penalty(reduction: int, penalties: dict[str, int]) -> int:
    if reduction >= 3:
        return penalties["short3"]
    if reduction == 2:
        return penalties["short2"]
    return penalties["short1"]


class EscapeNetwork:
    """Link colouring, levels and Up/Down distance tables for one root."""

    def __init__(
        self,
        topology: HyperXTopology,
        root: Coordinates,
        penalties: dict[str, int] | None = None,
    ):
        self.topology = topology
        self.root = topology.switch_index(root)
        self.penalties = dict(DEFAULT_ESCAPE_PENALTIES)
        if penalties:
            self.penalties.update(penalties)
        self.level = topology.distance_matrix[self.root].copy()
        self.unreachable = np.nonzero(self.level >= UNREACHABLE)[0]
        if len(self.unreachable):
            raise ValueError(
                f"{len(self.unreachable)} switches unreachable from root "
                f"{root}; escape network covers only the root's component"
            )
        self.ud = self._build_ud_table()

    # -- construction -------------------------------------------------------

    def _up_table(self) -> np.ndarray:
        """U[x, z] = length of the shortest strictly-descending Black path
        x -> z (each hop one level closer to the root), UNREACHABLE if none."""
        n = self.topology.num_switches
        nbr = self.topology.neighbor_table
        level = self.level
        up = np.full((n, n), UNREACHABLE, dtype=np.int32)
        np.fill_diagonal(up, 0)
        # Process switches by increasing level so parents are final first.
        order = np.argsort(level, kind="stable")
        for x in order:
            lx = level[x]
            if lx == 0:
                continue
            best = up[x]
            for b in nbr[x]:
                if b >= 0 and level[b] == lx - 1:
                    np.minimum(best, up[b] + 1, out=best)
        return up

    def _build_ud_table(self) -> np.ndarray:
        """ud[x, y] = min over apex z of U[x, z] + U[y, z]."""
        up = np.minimum(self._up_table(), 2**20)  # keep INF + INF in int32 range
        n = self.topology.num_switches
        ud = np.empty((n, n), dtype=np.int32)
        for x in range(n):
            ud[x] = np.min(up[x][np.newaxis, :] + up, axis=1)
        return ud

    # -- queries ------------------------------------------------------------

    def is_black(self, a: int, b: int) -> bool:
        """True for Up/Down (level-changing) links, False for Red links."""
        return self.level[a] != self.level[b]

    def ud_distance(self, x: Coordinates, y: Coordinates) -> int:
        return int(self.ud[self.topology.switch_index(x), self.topology.switch_index(y)])

    def candidates(self, current: int, target: int) -> list[EscapeCandidate]:
        """Every live neighbour strictly reducing the Up/Down distance."""
        if current == target:
            raise ValueError("current == target has no escape candidates")
        out = []
        cur_ud = int(self.ud[current, target])
        nbr = self.topology.neighbor_table[current]
        for port, b in enumerate(nbr):
            if b < 0:
                continue
            red = cur_ud - int(self.ud[b, target])
            if red < 1:
                continue
            la, lb = int(self.level[current]), int(self.level[b])
            if lb < la:
                kind, pen = EscapeKind.UP, self.penalties["up"]
            elif lb > la:
                kind, pen = EscapeKind.DOWN, self.penalties["down"]
            else:
                kind, pen = EscapeKind.SHORTCUT, shortcut_penalty(red, self.penalties)
            out.append(EscapeCandidate(port, int(b), red, kind, pen))
        return out

    def escape_candidates(self, current: Coordinates, target: Coordinates) -> list[EscapeCandidate]:
        return self.candidates(
            self.topology.switch_index(current), self.topology.switch_index(target)
        )

    # -- diagnostics --------------------------------------------------------

    def write_diagnostics(self, path) -> None:
        """Dump per-switch levels and per-link colours as CSV."""
        topo = self.topology
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["kind", "a", "b", "level_a", "level_b", "color"])
            for i in range(topo.num_switches):
                w.writerow(["switch", i, "", int(self.level[i]), "", ""])
            for link in topo.all_links():
                if link in topo.fault_mask:
                    continue
                color = "black" if self.is_black(link.a, link.b) else "red"
                w.writerow(
                    ["link", link.a, link.b, int(self.level[link.a]), int(self.level[link.b]), color]
                )


def build_escape(
    topology: HyperXTopology,
    root: Coordinates,
    penalties: dict[str, int] | None = None,
) -> EscapeNetwork:
    return EscapeNetwork(topology, root, penalties)


def channel_dependency_graph(escape: EscapeNetwork) -> nx.DiGraph:
    """Union-over-targets dependency graph over escape channels.

    There is an arc (a -> x) => (x -> y) whenever some target t makes both
    hops valid escape candidates in sequence, i.e. the Up/Down distance to t
    strictly decreases a -> x -> y.  Note the union over targets is cyclic
    even on small fault-free instances (same-level shortcut rings whose hops
    each serve a different target); it is a diagnostic view, not the
    deadlock-freedom certificate.  See verify_escape_acyclic.
    """
    topo = escape.topology
    n = topo.num_switches
    nbr = topo.neighbor_table
    ud = escape.ud

    # Directed live channels and a membership matrix over targets:
    # M[e, t] = channel e = (a, x) strictly reduces Up/Down distance to t.
    channels: list[tuple[int, int]] = []
    for a in range(n):
        for b in nbr[a]:
            if b >= 0:
                channels.append((a, int(b)))
    ch_index = {c: i for i, c in enumerate(channels)}
    m = np.zeros((len(channels), n), dtype=np.int8)
    for i, (a, x) in enumerate(channels):
        m[i] = ud[x] < ud[a]

    g = nx.DiGraph()
    g.add_nodes_from(range(len(channels)))
    in_ch: list[list[int]] = [[] for _ in range(n)]
    out_ch: list[list[int]] = [[] for _ in range(n)]
    for i, (a, x) in enumerate(channels):
        in_ch[x].append(i)
        out_ch[a].append(i)
    for x in range(n):
        if not in_ch[x] or not out_ch[x]:
            continue
        both = m[in_ch[x]] @ m[out_ch[x]].T.astype(np.int32)
        for ii, jj in zip(*np.nonzero(both)):
            g.add_edge(in_ch[x][ii], out_ch[x][jj])
    g.graph["channels"] = channels
    return g


def verify_escape_acyclic(escape: EscapeNetwork) -> tuple[bool, list[tuple[int, int]] | None]:
    """Check every per-target escape dependency graph for cycles.

    For each target t, the directed graph whose arcs are the candidate hops
    toward t must be acyclic; the Up/Down distance to t is the certificate
    (it strictly decreases along every arc).  Any arc failing the strict
    decrease breaks the certificate, in which case the offending target's
    graph is searched for a witness cycle, returned as a list of directed
    links (a, b).  Returns (True, None) when all targets check out.
    """
    topo = escape.topology
    n = topo.num_switches
    ud = escape.ud
    for t in range(n):
        bad = False
        arcs = []
        for a in range(n):
            if a == t:
                continue
            cands = escape.candidates(a, t)
            if not cands:
                raise AssertionError(
                    f"escape progress violated: no candidate from {a} to {t}"
                )
            for c in cands:
                arcs.append((a, c.neighbor))
                if not ud[c.neighbor, t] < ud[a, t]:
                    bad = True
        if bad:  # pragma: no cover - descent certificate failed
            g = nx.DiGraph(arcs)
            try:
                return False, list(nx.find_cycle(g))
            except nx.NetworkXNoCycle:
                pass
    return True, None
