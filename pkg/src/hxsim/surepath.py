"""SurePath: routing subnetwork composed with the Up/Down escape subnetwork.

Virtual channels are split into two classes: VCs 0..v-2 carry the adaptive
routing subnetwork (C_Rout) and the last VC is the escape subnetwork
(C_Esc).  A packet on a routing VC may request either class; once on the
escape VC it can never come back.  Requests are priced as occupancy Q plus
the candidate's penalty P and a single request goes to the cheapest
admissible output.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from hxsim.escape import EscapeNetwork
from hxsim.routing import (
    Candidate,
    CandidateSet,
    Provenance,
    RouteState,
    omni_candidates,
    polarized_candidates,
)
from hxsim.topology import HyperXTopology

#: Default penalty schedule, phits.  Routing-candidate penalties are defined
#: by the routing algorithms; escape penalties by the escape subnetwork.
DEFAULT_PENALTIES = {
    "minimal": 0,
    "deroute": 64,
    "polar1": 64,
    "polar2": 80,
    "up": 112,
    "down": 96,
    "short1": 80,
    "short2": 64,
    "short3": 48,
}

PACKET_PHITS = 16


class SubnetworkClass(enum.Enum):
    C_ROUT = "routing"
    C_ESC = "escape"


class HopKind(enum.Enum):
    ROUTING = "routing"
    ESCAPE = "escape"
    FORCED = "forced"


class BaseRouting(enum.Enum):
    OMNI = "omni_sp"
    POLARIZED = "pol_sp"


@dataclass(frozen=True)
class Request:
    """A scored (port, VC) candidate as fed to the allocator."""

    port: int
    vc: int
    penalty: int
    escape: bool
    forced: bool
    deroute: bool = False


def escape_vc(num_vcs: int) -> int:
    """Index of the single escape VC (the last one)."""
    return num_vcs - 1


def surepath_candidates(
    topo: HyperXTopology,
    esc: EscapeNetwork,
    current: int,
    state: RouteState,
    base: BaseRouting,
    num_vcs: int,
    omni_m: int | None = None,
) -> list[Request]:
    """Unified request list for a packet head at `current`.

    Packets on C_Rout get the base routing candidates on every routing VC
    plus the escape candidates on the escape VC; packets on C_Esc get only
    the escape candidates.  When the routing set is empty the escape hops
    are marked forced.
    """
    ev = escape_vc(num_vcs)
    out: list[Request] = []
    routing_empty = True
    if not state.in_escape:
        if base is BaseRouting.OMNI:
            m = topo.n_dims if omni_m is None else omni_m
            rset = omni_candidates(topo, current, state, m)
        else:
            rset = polarized_candidates(topo, current, state)
        routing_empty = len(rset) == 0
        for c in rset:
            for vc in range(ev):
                out.append(
                    Request(c.port, vc, c.penalty, escape=False, forced=False,
                            deroute=c.penalty > 0 and base is BaseRouting.OMNI)
                )
    for c in esc.candidates(current, state.destination):
        out.append(
            Request(c.port, ev, c.penalty, escape=True, forced=routing_empty)
        )
    return out


class SwitchOccupancy:
    """Per-switch output occupancy view backing the Q metric.

    output_queue[port, vc] holds the local output-queue occupancy in phits;
    consumed_credits[port, vc] the credits consumed for the neighbour's
    input VC buffer and not yet returned.
    """

    def __init__(self, ports: int, vcs: int):
        self.output_queue = np.zeros((ports, vcs), dtype=np.int64)
        self.consumed_credits = np.zeros((ports, vcs), dtype=np.int64)
        self.credit_available = np.full((ports, vcs), 128, dtype=np.int64)
        self.queue_slots_free = np.full((ports, vcs), 4, dtype=np.int64)

    def q_s(self, port: int, vc: int) -> int:
        return int(self.output_queue[port, vc] + self.consumed_credits[port, vc])

    def score(self, port: int, vc: int, penalty: int) -> int:
        """Q + P: the requested queue counted twice plus its port siblings."""
        port_sum = sum(self.q_s(port, v) for v in range(self.output_queue.shape[1]))
        return self.q_s(port, vc) + port_sum + penalty

    def admissible(self, port: int, vc: int) -> bool:
        """Virtual cut-through admission for one full packet."""
        return (
            self.credit_available[port, vc] >= PACKET_PHITS
            and self.queue_slots_free[port, vc] >= 1
        )


def score_request(candidate: Request, occ: SwitchOccupancy) -> int:
    return occ.score(candidate.port, candidate.vc, candidate.penalty)


def select_request(
    candidates: list[Request], occ: SwitchOccupancy, rng: np.random.Generator
) -> Request | None:
    """Pick the admissible candidate with the lowest Q + P, ties random.

    Returns None when every candidate fails flow control; the packet waits
    and re-evaluates next cycle.
    """
    best: list[Request] = []
    best_score = None
    for c in candidates:
        if not occ.admissible(c.port, c.vc):
            continue
        s = score_request(c, occ)
        if best_score is None or s < best_score:
            best, best_score = [c], s
        elif s == best_score:
            best.append(c)
    if not best:
        return None
    return best[int(rng.integers(len(best)))]
