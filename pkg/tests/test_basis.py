import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spindomino.basis import (
    SpinConfiguration,
    Topology,
    TopologyKind,
    amplification_sector,
    allowed_flips,
    enumerate_sector,
    format_sector,
    parse_sector,
    sector_dimension_scan,
    wall_count,
)
from spindomino.errors import ContractViolationError, SectorTooLargeError
from spindomino.oracle import full_space_reachability

from conftest import all_topologies


def test_configuration_string_roundtrip(cfg):
    c = cfg("uddu")
    assert c.bits == 0b1001
    assert str(c) == "uddu"
    assert c.spin(1) == 1 and c.spin(2) == -1
    assert c.flip(2) == cfg("uudu")


def test_configuration_rejects_stray_bits():
    with pytest.raises(ContractViolationError):
        SpinConfiguration(3, 0b1000)
    with pytest.raises(ContractViolationError):
        SpinConfiguration.from_string("udx")


def test_configuration_ordering_is_by_n_then_bits():
    a, b, c = SpinConfiguration(3, 5), SpinConfiguration(3, 6), SpinConfiguration(4, 0)
    assert sorted([c, b, a]) == [a, b, c]


def test_topology_invariants():
    with pytest.raises(ContractViolationError):
        Topology.ring_full(2)
    with pytest.raises(ContractViolationError):
        Topology(5, TopologyKind.RING_FULL, frozenset({"right"}))
    with pytest.raises(ContractViolationError):
        Topology.ring_bond(2)


def test_wall_count_examples(cfg):
    assert wall_count(SpinConfiguration.all_down(8), Topology.open(8, "none")) == 0
    assert wall_count(cfg("uddd"), Topology.open(4)) == 1
    assert wall_count(cfg("uddd"), Topology.ring_full(4)) == 2


def test_wall_count_size_mismatch(cfg):
    with pytest.raises(ContractViolationError):
        wall_count(cfg("udd"), Topology.open(4))
    with pytest.raises(ContractViolationError):
        allowed_flips(cfg("udd"), Topology.open(4))


def test_allowed_flips_examples(cfg):
    assert allowed_flips(cfg("uddd"), Topology.open(4, "right")) == [2]
    assert allowed_flips(cfg("uuud"), Topology.open(4, "right")) == [3, 4]


def _brute_force_flips(config, topo):
    n, out = topo.n, []
    for k in range(1, n + 1):
        if topo.is_ring:
            nb = [(k - 2) % n + 1, k % n + 1]
        else:
            nb = [j for j in (k - 1, k + 1) if 1 <= j <= n]
        ok = len(nb) == 2 and config.spin(nb[0]) != config.spin(nb[1])
        if not topo.is_ring or topo.kind is TopologyKind.RING_BOND:
            if k == 1 and "left" in {e.value for e in topo.end_terms}:
                ok |= config.spin(2) == 1
            if k == n and "right" in {e.value for e in topo.end_terms}:
                ok |= config.spin(n - 1) == 1
        if ok:
            out.append(k)
    return out


def test_allowed_flips_ring_example_matches_brute_force(cfg):
    c, topo = cfg("uddddd"), Topology.ring_full(6)
    assert _brute_force_flips(c, topo) == [2, 6]
    assert allowed_flips(c, topo) == [2, 6]


@pytest.mark.parametrize("n", [3, 4, 5, 7])
def test_flip_rule_matches_neighbour_definition_exhaustively(n):
    for topo in all_topologies(n):
        for bits in range(2**n):
            c = SpinConfiguration(n, bits)
            assert allowed_flips(c, topo) == _brute_force_flips(c, topo)


@pytest.mark.parametrize("n", range(3, 13))
def test_wall_conservation(n):
    for topo in all_topologies(n):
        bulk_only = Topology(n, topo.kind)
        for bits in range(0, 2**n, max(1, 2**n // 512)):
            c = SpinConfiguration(n, bits)
            w = wall_count(c, topo)
            bulk = set(allowed_flips(c, bulk_only))
            for k in allowed_flips(c, topo):
                dw = wall_count(c.flip(k), topo) - w
                if k in bulk:
                    assert dw == 0
                elif topo.is_ring:
                    # ring wall counts stay even, so an end-term flip moves them by 0 or 2
                    assert dw in (-2, 0, 2)
                else:
                    assert abs(dw) == 1


def test_ring_walls_even():
    topo = Topology.ring_full(7)
    assert all(wall_count(SpinConfiguration(7, b), topo) % 2 == 0 for b in range(128))


def test_enumerate_sector_examples(cfg):
    assert enumerate_sector(SpinConfiguration.all_down(6), Topology.open(6, "none")).dimension == 1
    b = enumerate_sector(cfg("uddddd"), Topology.open(6, "right"))
    assert [str(s) for s in b.states] == [str(SpinConfiguration.staircase(6, k)) for k in range(1, 7)]
    assert enumerate_sector(cfg("uddddd"), Topology.ring_full(6)).dimension == 30


def test_sector_basis_invariants(cfg):
    b = enumerate_sector(cfg("uddddd"), Topology.ring_bond(6, "right"))
    assert len(set(b.states)) == b.dimension
    assert all(b.index_of(s) == i for i, s in enumerate(b.states))
    assert b.seed in b
    for s in b.states:
        for k in allowed_flips(s, b.topology):
            assert s.flip(k) in b


def test_bfs_layer_order_ties_by_bits():
    # ring-full from u d^5: layer 1 is {site 2 up, site 6 up} added in ascending bits
    b = enumerate_sector(SpinConfiguration.single_flip(6), Topology.ring_full(6))
    assert [int(c) for c in b.codes[:3]] == [0b1, 0b11, 0b100001]


def test_bfs_deterministic(cfg):
    topo = Topology.ring_bond(8, "both")
    a = enumerate_sector(cfg("uddudddd"), topo)
    b = enumerate_sector(cfg("uddudddd"), topo)
    assert np.array_equal(a.codes, b.codes)
    assert a.ordering_hash() == b.ordering_hash()


@pytest.mark.parametrize("n", [3, 6, 9, 12])
def test_sector_equals_oracle_reachability(n):
    rng = np.random.default_rng(n)
    for topo in all_topologies(n):
        for bits in [1, 0, int(rng.integers(2**n))]:
            seed = SpinConfiguration(n, bits)
            assert set(enumerate_sector(seed, topo).states) == full_space_reachability(seed, topo)


def test_sector_cap():
    with pytest.raises(SectorTooLargeError, match="30"):
        enumerate_sector(SpinConfiguration.single_flip(7), Topology.ring_full(7), cap=30)
    assert enumerate_sector(SpinConfiguration.single_flip(6), Topology.ring_full(6), cap=30).dimension == 30


def test_dimension_scan_examples():
    assert sector_dimension_scan("open", "right", [4, 6, 8]) == [(4, 4), (6, 6), (8, 8)]
    assert sector_dimension_scan("ring-full", "none", [4, 6]) == [(4, 12), (6, 30)]
    assert sector_dimension_scan("open", "none", [5]) == [(5, 4)]


def test_amplification_sector_appends_isolated_all_down():
    b = amplification_sector(Topology.open(6, "right"))
    assert b.dimension == 7
    assert b.states[-1] == SpinConfiguration.all_down(6)
    assert b.seed == SpinConfiguration.single_flip(6)


def test_sector_export_roundtrip():
    b = enumerate_sector(SpinConfiguration.single_flip(5), Topology.open(5, "right"))
    text = format_sector(b)
    assert text.splitlines()[0] == "n=5 dim=5 topology=open endterms=right"
    assert text.splitlines()[1] == "udddd"
    assert parse_sector(text) == list(b.states)


@settings(max_examples=60, deadline=None)
@given(n=st.integers(3, 10), data=st.data())
def test_closure_property(n, data):
    topo = data.draw(st.sampled_from(all_topologies(n)))
    bits = data.draw(st.integers(0, 2**n - 1))
    b = enumerate_sector(SpinConfiguration(n, bits), topo)
    for s in b.states:
        assert all(s.flip(k) in b for k in allowed_flips(s, topo))
