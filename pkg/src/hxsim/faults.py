"""Fault-set construction: random sequences and shaped configurations.

Shaped configurations remove every link inside one or more complete
subgraphs anchored at the escape root, reproducing the published fault
shapes: Row/Subplane/Cross in 2D and Row/Subcube/Star in 3D.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from hxsim.topology import Coordinates, HyperXTopology, LinkId, UNREACHABLE


class FaultKind(enum.Enum):
    RANDOM = "random"
    ROW = "row"
    SUBPLANE = "subplane"
    CROSS = "cross"
    SUBCUBE = "subcube"
    STAR = "star"


@dataclass
class FaultReport:
    count: int
    connected: bool
    diameter: int | float
    anchor_degree: int | None = None


def random_fault_sequence(
    topo: HyperXTopology, seed: int, max_count: int | None = None
) -> list[LinkId]:
    """Uniform random ordering of the live links; prefixes are fault sets.

    The first j entries are identical for every cutoff j, so sweeping fault
    counts over prefixes of one sequence is monotone.
    """
    links = topo.all_links()
    links = [l for l in links if l not in topo.fault_mask]
    if max_count is not None and max_count > len(links):
        raise ValueError(f"max_count {max_count} exceeds live link count {len(links)}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(links))
    seq = [links[i] for i in order]
    return seq if max_count is None else seq[:max_count]


def _clique_links(topo: HyperXTopology, switches: list[int]) -> set[LinkId]:
    """All topology links with both endpoints in the switch set."""
    sset = set(switches)
    out = set()
    for a, b in combinations(sorted(sset), 2):
        diff = np.nonzero(topo.coords[a] != topo.coords[b])[0]
        if len(diff) == 1:
            out.add(LinkId.of(a, b, int(diff[0])))
    return out


def _segment(anchor_c: int, length: int, k: int) -> list[int]:
    """length consecutive coordinate values containing anchor_c, centred
    where possible and shifted to fit inside 0..k-1 otherwise."""
    lo = anchor_c - length // 2
    lo = max(0, min(lo, k - length))
    if not lo <= anchor_c < lo + length:
        raise ValueError("segment cannot contain the anchor")
    return list(range(lo, lo + length))


def _line(topo: HyperXTopology, anchor: int, dim: int, values: list[int]) -> list[int]:
    """Switches matching the anchor except coordinate `dim` drawn from values."""
    out = []
    for v in values:
        c = list(topo.switch_coords(anchor))
        c[dim] = v
        out.append(topo.switch_index(tuple(c)))
    return out


def shaped_faults(
    topo: HyperXTopology, kind: FaultKind | str, anchor: Coordinates
) -> set[LinkId]:
    """Build one of the published shaped fault sets around the anchor."""
    kind = FaultKind(kind) if not isinstance(kind, FaultKind) else kind
    a = topo.switch_index(anchor)
    n = topo.n_dims
    if kind is FaultKind.ROW:
        k = topo.sides[0]
        faults = _clique_links(topo, _line(topo, a, 0, list(range(k))))
    elif kind is FaultKind.SUBPLANE:
        if n != 2:
            raise ValueError("subplane faults are a 2D shape")
        block = [_segment(c, 5, k) for c, k in zip(anchor, topo.sides)]
        switches = [topo.switch_index((x, y)) for x in block[0] for y in block[1]]
        faults = _clique_links(topo, switches)
    elif kind is FaultKind.CROSS:
        if n != 2:
            raise ValueError("cross faults are a 2D shape")
        faults = set()
        for dim in range(2):
            vals = _segment(anchor[dim], 11, topo.sides[dim])
            faults |= _clique_links(topo, _line(topo, a, dim, vals))
    elif kind is FaultKind.SUBCUBE:
        if n != 3:
            raise ValueError("subcube faults are a 3D shape")
        block = [_segment(c, 3, k) for c, k in zip(anchor, topo.sides)]
        switches = [
            topo.switch_index((x, y, z))
            for x in block[0]
            for y in block[1]
            for z in block[2]
        ]
        faults = _clique_links(topo, switches)
    elif kind is FaultKind.STAR:
        if n != 3:
            raise ValueError("star faults are a 3D shape")
        faults = set()
        for dim in range(3):
            vals = _segment(anchor[dim], 7, topo.sides[dim])
            faults |= _clique_links(topo, _line(topo, a, dim, vals))
    else:
        raise ValueError(f"unsupported shaped fault kind {kind}")
    faults -= topo.fault_mask
    _check_anchor_survives(topo, faults, a)
    return faults


def _check_anchor_survives(topo: HyperXTopology, faults: set[LinkId], anchor: int) -> None:
    live = 0
    for p in range(topo.switch_ports):
        b = topo.neighbor_table[anchor][p]
        if b < 0:
            continue
        if LinkId.of(anchor, int(b), int(topo.port_dim[p])) not in faults:
            live += 1
    if live == 0:
        raise ValueError("shaped fault set would disconnect the anchor entirely")


def validate_faults(
    topo: HyperXTopology, faults: set[LinkId], anchor: Coordinates | None = None
) -> FaultReport:
    """Apply the faults to a scratch copy and report the damage."""
    scratch = HyperXTopology(topo.sides, topo.servers_per_switch)
    scratch.apply_faults(topo.fault_mask | set(faults))
    deg = None
    if anchor is not None:
        deg = len(scratch.neighbors(anchor))
    return FaultReport(
        count=len(faults),
        connected=scratch.is_connected(),
        diameter=scratch.diameter(),
        anchor_degree=deg,
    )
