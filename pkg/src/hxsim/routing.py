"""Per-hop candidate sets for the baseline routing algorithms.

Minimal, DOR, Valiant, Omnidimensional and Polarized.  All candidate
functions are pure: they read the topology's BFS tables and the packet's
RouteState and return a CandidateSet.  The simulation kernel mirrors this
logic in array form; tests cross-check both against each other.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from hxsim.topology import HyperXTopology, UNREACHABLE

#: Deroute penalty in phits for Omnidimensional non-minimal hops.
DEROUTE_PENALTY = 64
#: Polarized penalties relative to the best weight gain present at a hop.
POLARIZED_PENALTIES = (0, 64, 80)


class Provenance(enum.Enum):
    ROUTING = "routing"
    ESCAPE = "escape"


class LadderScheme(enum.Enum):
    ONE_BY_ONE = "one_by_one"
    TWO_BY_TWO = "two_by_two"


@dataclass
class RouteState:
    """In-flight routing header of a packet."""

    source: int
    destination: int
    hop_count: int = 0
    deroutes_used: int = 0
    valiant_midpoint: int | None = None
    valiant_phase2: bool = False
    in_escape: bool = False


@dataclass(frozen=True)
class Candidate:
    port: int
    penalty: int
    vc: int | None = None


@dataclass
class CandidateSet:
    candidates: list[Candidate] = field(default_factory=list)
    provenance: Provenance = Provenance.ROUTING

    def ports(self) -> list[int]:
        return [c.port for c in self.candidates]

    def __len__(self) -> int:
        return len(self.candidates)

    def __iter__(self):
        return iter(self.candidates)


class Undeliverable(Exception):
    """The (deterministic) route for this packet crosses a dead link."""


def minimal_candidates(topo: HyperXTopology, current: int, state: RouteState) -> CandidateSet:
    """All live neighbours one hop closer to the destination, penalty 0."""
    d = topo.distance_matrix
    want = d[current, state.destination] - 1
    cands = [
        Candidate(p, 0)
        for p, b in enumerate(topo.neighbor_table[current])
        if b >= 0 and d[b, state.destination] == want
    ]
    return CandidateSet(cands)


def dor_next(topo: HyperXTopology, current: int, state: RouteState) -> Candidate:
    """The unique hop correcting the lowest-indexed unaligned dimension."""
    cc = topo.coords[current]
    dc = topo.coords[state.destination]
    for dim in range(topo.n_dims):
        if cc[dim] != dc[dim]:
            v = int(dc[dim])
            slot = v if v < cc[dim] else v - 1
            port = sum(k - 1 for k in topo.sides[:dim]) + slot
            if topo.neighbor_table[current][port] < 0:
                raise Undeliverable(
                    f"DOR link for dimension {dim} from switch {current} is faulted"
                )
            return Candidate(port, 0)
    raise ValueError("current == destination")


def valiant_candidates(topo: HyperXTopology, current: int, state: RouteState) -> CandidateSet:
    """Minimal toward the midpoint, then minimal toward the destination."""
    if state.valiant_midpoint is None:
        raise ValueError("valiant_midpoint not set")
    if not state.valiant_phase2 and current == state.valiant_midpoint:
        state.valiant_phase2 = True
    if state.valiant_phase2:
        return minimal_candidates(topo, current, state)
    inner = RouteState(source=state.source, destination=state.valiant_midpoint)
    return minimal_candidates(topo, current, inner)


def omni_candidates(
    topo: HyperXTopology, current: int, state: RouteState, m: int
) -> CandidateSet:
    """Omnidimensional: aligning hops free, deroutes in unaligned dimensions.

    Moves are allowed only in dimensions where the current switch differs
    from the destination; the deroute budget m is global across dimensions.
    """
    cc = topo.coords[current]
    dc = topo.coords[state.destination]
    nbr = topo.neighbor_table[current]
    cands = []
    base = 0
    for dim, k in enumerate(topo.sides):
        if cc[dim] != dc[dim]:
            for slot in range(k - 1):
                port = base + slot
                b = nbr[port]
                if b < 0:
                    continue
                v = slot if slot < cc[dim] else slot + 1
                if v == dc[dim]:
                    cands.append(Candidate(port, 0))
                elif state.deroutes_used < m:
                    cands.append(Candidate(port, DEROUTE_PENALTY))
        base += k - 1
    return CandidateSet(cands)


def polarized_mu(topo: HyperXTopology, current: int, source: int, destination: int) -> int:
    """Weight function d(current, source) - d(current, destination)."""
    d = topo.distance_matrix
    return int(d[current, source]) - int(d[current, destination])


def polarized_candidates(topo: HyperXTopology, current: int, state: RouteState) -> CandidateSet:
    """Hops that never decrease the weight function mu = d(c,s) - d(c,t).

    Neighbours are classified by their distance variations (ds, dt) to the
    source and destination; only classes with dmu = ds - dt >= 0 qualify,
    and the two dmu = 0 classes are phase-filtered: departing both endpoints
    is allowed only in the source half of the route (d(c,s) < d(c,t)),
    approaching both only in the destination half.  Penalties are relative
    to the best dmu present among the admitted candidates.
    """
    d = topo.distance_matrix
    s, t = state.source, state.destination
    ds_cur = int(d[current, s])
    dt_cur = int(d[current, t])
    near_source = ds_cur < dt_cur
    admitted: list[tuple[int, int]] = []  # (port, dmu)
    for p, b in enumerate(topo.neighbor_table[current]):
        if b < 0:
            continue
        ds = int(d[b, s]) - ds_cur
        dt = int(d[b, t]) - dt_cur
        dmu = ds - dt
        if dmu < 0:
            continue
        if dmu == 0:
            if ds == 0:  # revolving both endpoints is not a polarized hop
                continue
            if ds == 1 and not near_source:
                continue
            if ds == -1 and near_source:
                continue
        admitted.append((p, dmu))
    if not admitted:
        return CandidateSet([])
    best = max(dmu for _, dmu in admitted)
    cands = [
        Candidate(p, POLARIZED_PENALTIES[min(best - dmu, 2)]) for p, dmu in admitted
    ]
    return CandidateSet(cands)


def ladder_vc(state: RouteState, scheme: LadderScheme, num_vcs: int) -> int:
    """VC index for the packet's next switch-to-switch hop under a ladder."""
    if scheme is LadderScheme.ONE_BY_ONE:
        if state.hop_count >= num_vcs:
            raise ValueError(
                f"hop count {state.hop_count} exceeds {num_vcs}-VC ladder"
            )
        return state.hop_count
    if state.hop_count >= 2 * num_vcs:
        raise ValueError(
            f"hop count {state.hop_count} exceeds two-by-two {num_vcs}-VC ladder"
        )
    return state.hop_count // 2
