"""SurePath composition: request building, Q+P scoring, selection."""

import numpy as np
import pytest

from hxsim.escape import EscapeNetwork
from hxsim.routing import RouteState, polarized_candidates
from hxsim.surepath import (
    BaseRouting,
    DEFAULT_PENALTIES,
    Request,
    SwitchOccupancy,
    escape_vc,
    score_request,
    select_request,
    surepath_candidates,
)
from hxsim.topology import HyperXTopology


@pytest.fixture(scope="module")
def net():
    topo = HyperXTopology((4, 4), 2)
    esc = EscapeNetwork(topo, (0, 0))
    return topo, esc


class TestCandidates:
    def test_routing_vcs_plus_escape_vc(self, net):
        """A C_Rout packet requests every routing VC and the escape VC."""
        topo, esc = net
        a = topo.switch_index((1, 1))
        t = topo.switch_index((3, 3))
        state = RouteState(a, t)
        reqs = surepath_candidates(topo, esc, a, state, BaseRouting.POLARIZED, 4)
        ev = escape_vc(4)
        routing = [r for r in reqs if not r.escape]
        escape = [r for r in reqs if r.escape]
        assert {r.vc for r in routing} == {0, 1, 2}
        assert all(r.vc == ev for r in escape)
        n_ports = len({c.port for c in polarized_candidates(topo, a, state)})
        assert len(routing) == 3 * n_ports
        assert escape  # escape is always offered alongside

    def test_escape_is_one_way(self, net):
        """Once on C_Esc, only escape candidates are generated."""
        topo, esc = net
        a = topo.switch_index((1, 1))
        t = topo.switch_index((3, 3))
        state = RouteState(a, t, in_escape=True)
        reqs = surepath_candidates(topo, esc, a, state, BaseRouting.POLARIZED, 4)
        assert reqs
        assert all(r.escape for r in reqs)

    def test_forced_flag_when_routing_empty(self, net):
        """Omni with an exhausted deroute budget at an aligned-but-wrong spot
        can have no routing candidates; escape must then be marked forced."""
        topo, esc = net
        # destination aligned in no dimension but budget exhausted and no
        # aligned port live: fabricate by killing the two aligning links.
        a = topo.switch_index((0, 0))
        t = topo.switch_index((3, 3))
        topo2 = HyperXTopology((4, 4), 2)
        kill = [
            topo2.link_between(a, topo2.switch_index((3, 0))),
            topo2.link_between(a, topo2.switch_index((0, 3))),
        ]
        topo2.apply_faults(kill)
        esc2 = EscapeNetwork(topo2, (0, 0))
        state = RouteState(a, t, deroutes_used=2)
        reqs = surepath_candidates(
            topo2, esc2, a, state, BaseRouting.OMNI, 4, omni_m=2
        )
        assert reqs
        assert all(r.escape and r.forced for r in reqs)

    def test_escape_not_forced_when_routing_exists(self, net):
        topo, esc = net
        a, t = topo.switch_index((1, 0)), topo.switch_index((2, 2))
        reqs = surepath_candidates(
            topo, esc, a, RouteState(a, t), BaseRouting.POLARIZED, 4
        )
        assert any(not r.escape for r in reqs)
        assert all(not r.forced for r in reqs if r.escape)


class TestScoring:
    def test_worked_example(self):
        """q_s(requested) counted twice plus the port's sibling VCs plus P.

        Requested queue: 6 phits queued + 4 consumed credits = 10.
        Sibling VC on the same port: 6.  Penalty 64.
        Score = 10 (own, once more in the port sum) + (10 + 6) + 64 = 90.
        """
        occ = SwitchOccupancy(ports=2, vcs=2)
        occ.output_queue[1, 0] = 6
        occ.consumed_credits[1, 0] = 4
        occ.output_queue[1, 1] = 6
        req = Request(port=1, vc=0, penalty=64, escape=False, forced=False)
        assert score_request(req, occ) == 10 + (10 + 6) + 64

    def test_empty_switch_scores_penalty(self):
        occ = SwitchOccupancy(ports=4, vcs=4)
        req = Request(port=2, vc=1, penalty=80, escape=True, forced=False)
        assert score_request(req, occ) == 80


class TestSelection:
    def test_picks_lowest_score(self):
        occ = SwitchOccupancy(ports=3, vcs=2)
        occ.output_queue[0, 0] = 50
        cands = [
            Request(0, 0, 0, escape=False, forced=False),
            Request(1, 0, 64, escape=False, forced=False),
            Request(2, 0, 96, escape=True, forced=False),
        ]
        rng = np.random.default_rng(0)
        # port 0 scores 100, port 1 scores 64, escape scores 96
        assert select_request(cands, occ, rng).port == 1

    def test_inadmissible_filtered(self):
        occ = SwitchOccupancy(ports=2, vcs=2)
        occ.credit_available[0, 0] = 15  # below one packet
        occ.queue_slots_free[1, 0] = 0
        cands = [
            Request(0, 0, 0, escape=False, forced=False),
            Request(1, 0, 0, escape=False, forced=False),
            Request(1, 1, 64, escape=False, forced=False),
        ]
        rng = np.random.default_rng(0)
        got = select_request(cands, occ, rng)
        assert (got.port, got.vc) == (1, 1)

    def test_returns_none_when_blocked(self):
        occ = SwitchOccupancy(ports=1, vcs=1)
        occ.queue_slots_free[0, 0] = 0
        cands = [Request(0, 0, 0, escape=False, forced=False)]
        assert select_request(cands, occ, np.random.default_rng(0)) is None

    def test_tie_break_is_uniform(self):
        occ = SwitchOccupancy(ports=2, vcs=1)
        cands = [
            Request(0, 0, 0, escape=False, forced=False),
            Request(1, 0, 0, escape=False, forced=False),
        ]
        rng = np.random.default_rng(7)
        picks = {select_request(cands, occ, rng).port for _ in range(100)}
        assert picks == {0, 1}


def test_default_penalty_schedule():
    assert DEFAULT_PENALTIES["minimal"] == 0
    assert DEFAULT_PENALTIES["deroute"] == DEFAULT_PENALTIES["polar1"] == 64
    assert DEFAULT_PENALTIES["polar2"] == 80
    assert DEFAULT_PENALTIES["up"] == 112
    assert DEFAULT_PENALTIES["down"] == 96
    assert (
        DEFAULT_PENALTIES["short1"],
        DEFAULT_PENALTIES["short2"],
        DEFAULT_PENALTIES["short3"],
    ) == (80, 64, 48)


def test_escape_vc_is_last():
    assert escape_vc(4) == 3
    assert escape_vc(2) == 1
