"""Candidate-set semantics of the five baseline routings, cross-checked
against brute-force oracles over the distance matrix."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hxsim.routing import (
    Candidate,
    LadderScheme,
    RouteState,
    Undeliverable,
    dor_next,
    ladder_vc,
    minimal_candidates,
    omni_candidates,
    polarized_candidates,
    polarized_mu,
    valiant_candidates,
)
from hxsim.topology import HyperXTopology


@pytest.fixture(scope="module")
def topo():
    return HyperXTopology((4, 4, 4), 2)


@pytest.fixture(scope="module")
def topo2d():
    return HyperXTopology((5, 5), 2)


def live_neighbours(topo, a):
    return [
        (p, int(b)) for p, b in enumerate(topo.neighbor_table[a]) if b >= 0
    ]


class TestMinimal:
    def test_oracle(self, topo):
        """Exactly the live neighbours strictly closer to the destination."""
        rng = np.random.default_rng(0)
        d = topo.distance_matrix
        for _ in range(200):
            a, t = rng.integers(topo.num_switches, size=2)
            if a == t:
                continue
            got = {c.port for c in minimal_candidates(topo, a, RouteState(0, int(t)))}
            want = {
                p for p, b in live_neighbours(topo, a) if d[b, t] == d[a, t] - 1
            }
            assert got == want

    def test_zero_penalty(self, topo):
        for c in minimal_candidates(topo, 0, RouteState(0, topo.num_switches - 1)):
            assert c.penalty == 0

    def test_count_fault_free(self, topo):
        """At Hamming distance h there are h aligned dimensions to fix."""
        a = topo.switch_index((0, 0, 0))
        t = topo.switch_index((1, 2, 0))
        assert len(minimal_candidates(topo, a, RouteState(0, t))) == 2


class TestDOR:
    def test_corrects_lowest_dimension_first(self, topo):
        a = topo.switch_index((0, 3, 1))
        t = topo.switch_index((2, 3, 0))
        c = dor_next(topo, a, RouteState(0, t))
        b = int(topo.neighbor_table[a][c.port])
        assert tuple(topo.coords[b]) == (2, 3, 1)

    def test_deterministic_path_length(self, topo):
        rng = np.random.default_rng(1)
        for _ in range(100):
            a, t = (int(x) for x in rng.integers(topo.num_switches, size=2))
            if a == t:
                continue
            cur, hops = a, 0
            while cur != t:
                c = dor_next(topo, cur, RouteState(0, t))
                cur = int(topo.neighbor_table[cur][c.port])
                hops += 1
            assert hops == topo.distance_matrix[a, t]

    def test_undeliverable_on_single_fault(self):
        """One dead link on the unique DOR path strands the pair."""
        topo = HyperXTopology((4, 4), 1)
        a = topo.switch_index((0, 0))
        mid = topo.switch_index((3, 0))  # DOR fixes dim 0 first
        t = topo.switch_index((3, 2))
        topo.apply_faults([topo.link_between(a, mid)])
        with pytest.raises(Undeliverable):
            dor_next(topo, a, RouteState(0, t))

    def test_at_destination_raises(self, topo):
        with pytest.raises(ValueError):
            dor_next(topo, 3, RouteState(0, 3))


class TestValiant:
    def test_two_phases(self, topo):
        a = topo.switch_index((0, 0, 0))
        mid = topo.switch_index((2, 2, 0))
        t = topo.switch_index((3, 0, 0))
        st_ = RouteState(0, t, valiant_midpoint=mid)
        d = topo.distance_matrix
        got = {c.port for c in valiant_candidates(topo, a, st_)}
        toward_mid = {
            p
            for p, b in live_neighbours(topo, a)
            if d[b, mid] == d[a, mid] - 1
        }
        assert got == toward_mid
        assert not st_.valiant_phase2
        # reaching the midpoint flips to phase 2
        got2 = {c.port for c in valiant_candidates(topo, mid, st_)}
        assert st_.valiant_phase2
        toward_t = {
            p
            for p, b in live_neighbours(topo, mid)
            if d[b, t] == d[mid, t] - 1
        }
        assert got2 == toward_t

    def test_requires_midpoint(self, topo):
        with pytest.raises(ValueError):
            valiant_candidates(topo, 0, RouteState(0, 5))


class TestOmni:
    def test_oracle(self, topo):
        """Moves only in unaligned dimensions; deroutes gated by budget."""
        rng = np.random.default_rng(2)
        for der_used, m in [(0, 3), (2, 3), (3, 3), (0, 0)]:
            for _ in range(60):
                a, t = (int(x) for x in rng.integers(topo.num_switches, size=2))
                if a == t:
                    continue
                state = RouteState(0, t, deroutes_used=der_used)
                got = {
                    (c.port, c.penalty) for c in omni_candidates(topo, a, state, m)
                }
                want = set()
                for p, b in live_neighbours(topo, a):
                    dim = int(topo.port_dim[p])
                    if topo.coords[a][dim] == topo.coords[t][dim]:
                        continue  # aligned dimensions are closed
                    if topo.coords[b][dim] == topo.coords[t][dim]:
                        want.add((p, 0))
                    elif der_used < m:
                        want.add((p, 64))
                assert got == want

    def test_budget_exhausted_is_minimal(self, topo):
        a, t = 0, topo.num_switches - 1
        state = RouteState(0, t, deroutes_used=3)
        mini = {c.port for c in minimal_candidates(topo, a, RouteState(0, t))}
        got = {c.port for c in omni_candidates(topo, a, state, 3)}
        assert got == mini


class TestPolarized:
    @staticmethod
    def classify(topo, a, b, s, t):
        d = topo.distance_matrix
        return int(d[b, s] - d[a, s]), int(d[b, t] - d[a, t])

    def test_table_of_classes(self, topo):
        """Admitted (ds, dt) classes are exactly the five published ones."""
        rng = np.random.default_rng(3)
        allowed = {(1, -1), (1, 0), (1, 1), (0, -1), (-1, -1)}
        for _ in range(200):
            s, t = (int(x) for x in rng.integers(topo.num_switches, size=2))
            if s == t:
                continue
            for a in rng.integers(topo.num_switches, size=4):
                a = int(a)
                if a == t:
                    continue
                got = polarized_candidates(topo, a, RouteState(s, t))
                d = topo.distance_matrix
                near_source = d[a, s] < d[a, t]
                for c in got:
                    b = int(topo.neighbor_table[a][c.port])
                    ds, dt = self.classify(topo, a, b, s, t)
                    assert (ds, dt) in allowed
                    if (ds, dt) == (1, 1):
                        assert near_source
                    if (ds, dt) == (-1, -1):
                        assert not near_source

    def test_mu_never_decreases(self, topo):
        rng = np.random.default_rng(4)
        for _ in range(200):
            s, t, a = (int(x) for x in rng.integers(topo.num_switches, size=3))
            if a == t or s == t:
                continue
            mu_a = polarized_mu(topo, a, s, t)
            for c in polarized_candidates(topo, a, RouteState(s, t)):
                b = int(topo.neighbor_table[a][c.port])
                assert polarized_mu(topo, b, s, t) >= mu_a

    def test_penalties_relative_to_best(self, topo):
        rng = np.random.default_rng(5)
        seen = set()
        for _ in range(300):
            s, t, a = (int(x) for x in rng.integers(topo.num_switches, size=3))
            if a == t or s == t:
                continue
            cands = list(polarized_candidates(topo, a, RouteState(s, t)))
            if not cands:
                continue
            pens = {c.penalty for c in cands}
            assert 0 in pens  # the best class is free
            assert pens <= {0, 64, 80}
            seen |= pens
        assert seen == {0, 64, 80}

    def test_nonempty_fault_free(self, topo):
        """A fault-free HyperX always offers a polarized hop off-destination."""
        for a in range(topo.num_switches):
            for t in (0, topo.num_switches - 1):
                if a == t:
                    continue
                assert len(polarized_candidates(topo, a, RouteState(t, t))) >= 0
        # spot-check with distinct source
        s = topo.switch_index((0, 0, 0))
        t = topo.switch_index((3, 3, 3))
        for a in range(topo.num_switches):
            if a == t:
                continue
            assert len(polarized_candidates(topo, a, RouteState(s, t))) > 0


class TestLadder:
    def test_one_by_one(self):
        st_ = RouteState(0, 1, hop_count=3)
        assert ladder_vc(st_, LadderScheme.ONE_BY_ONE, 6) == 3
        with pytest.raises(ValueError):
            ladder_vc(RouteState(0, 1, hop_count=6), LadderScheme.ONE_BY_ONE, 6)

    def test_two_by_two(self):
        for hop, vc in [(0, 0), (1, 0), (2, 1), (3, 1), (4, 2)]:
            assert ladder_vc(RouteState(0, 1, hop_count=hop), LadderScheme.TWO_BY_TWO, 3) == vc
        with pytest.raises(ValueError):
            ladder_vc(RouteState(0, 1, hop_count=6), LadderScheme.TWO_BY_TWO, 3)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 63), st.integers(0, 63))
def test_polarized_route_terminates(a, t):
    """Greedy best-penalty polarized walk reaches t within 2 * diameter."""
    topo = test_polarized_route_terminates.topo
    if a == t:
        return
    state = RouteState(a, t)
    cur, hops = a, 0
    while cur != t:
        cands = sorted(
            polarized_candidates(topo, cur, state), key=lambda c: c.penalty
        )
        assert cands, f"stuck at {cur}"
        cur = int(topo.neighbor_table[cur][cands[0].port])
        hops += 1
        assert hops <= 2 * 3


test_polarized_route_terminates.topo = HyperXTopology((4, 4, 4), 1)
