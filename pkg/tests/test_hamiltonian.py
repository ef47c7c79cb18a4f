import numpy as np
import pytest

from spindomino.basis import SpinConfiguration, Topology, allowed_flips, enumerate_sector, wall_count
from spindomino.errors import ClosureViolationError, ContractViolationError, DenseCapExceededError
from spindomino.hamiltonian import (
    CouplingSpec,
    SectorHamiltonian,
    build_sector_hamiltonian,
    exact_spectrum,
    format_matrix,
    full_hamiltonian_projection_check,
)
from spindomino.oracle import full_space_hamiltonian

from conftest import all_topologies


def staircase(n, h=1.0):
    basis = enumerate_sector(SpinConfiguration.single_flip(n), Topology.open(n, "right"))
    return build_sector_hamiltonian(basis, CouplingSpec(h))


def test_coupling_validation():
    for bad in (0.0, -1.0, float("inf"), float("nan")):
        with pytest.raises(ContractViolationError):
            CouplingSpec(bad)
    assert CouplingSpec(2.0).element == -1.0


def test_staircase_is_uniform_tridiagonal():
    H = staircase(4).to_dense()
    expected = -0.5 * (np.eye(4, k=1) + np.eye(4, k=-1))
    assert np.array_equal(H, expected)


def test_row_entries_match_allowed_flips():
    for topo in all_topologies(7):
        basis = enumerate_sector(SpinConfiguration.single_flip(7), topo)
        H = build_sector_hamiltonian(basis, CouplingSpec(0.8))
        dense = H.to_dense()
        assert np.array_equal(dense, dense.T)
        assert np.all(np.diag(dense) == 0)
        off = dense[dense != 0]
        assert np.all(off == -0.4)
        per_row = np.count_nonzero(dense, axis=1)
        assert list(per_row) == [len(allowed_flips(s, topo)) for s in basis.states]


def test_ring_full_row_counts():
    # an up-block of length L can grow or shrink at either edge; L = 1 and L = n-1 only
    # admit two moves.  Frozen from the full-space oracle.
    basis = enumerate_sector(SpinConfiguration.single_flip(6), Topology.ring_full(6))
    H = build_sector_hamiltonian(basis)
    counts = np.diff(H.matrix.indptr)
    lengths = np.array([s.n_up for s in basis.states])
    full = full_space_hamiltonian(Topology.ring_full(6))
    oracle_counts = np.diff(full.indptr)[basis.codes.astype(int)]
    assert np.array_equal(counts, oracle_counts)
    assert np.all(counts[(lengths == 1) | (lengths == 5)] == 2)
    assert np.all(counts[(lengths > 1) & (lengths < 5)] == 4)
    assert np.bincount(counts).tolist() == [0, 0, 12, 0, 18]


def test_closure_violation_detected():
    basis = enumerate_sector(SpinConfiguration.single_flip(5), Topology.open(5, "right"))
    broken = type(basis)(basis.topology, basis.seed, basis.codes[:-1], {int(c): i for i, c in enumerate(basis.codes[:-1])})
    with pytest.raises(ClosureViolationError):
        build_sector_hamiltonian(broken)


def test_exact_spectrum_two_level():
    evals, evecs = exact_spectrum(np.array([[0, -0.5], [-0.5, 0]]))
    assert np.allclose(evals, [-0.5, 0.5], atol=1e-15)


def test_exact_spectrum_closed_form_n20():
    evals, evecs = exact_spectrum(staircase(20))
    k = np.arange(1, 21)
    assert np.max(np.abs(evals - np.sort(-np.cos(np.pi * k / 21)))) < 1e-10


def test_exact_spectrum_residual_and_cap():
    H = build_sector_hamiltonian(enumerate_sector(SpinConfiguration.single_flip(7), Topology.ring_full(7)), CouplingSpec(1.3))
    evals, evecs = exact_spectrum(H)
    res = H.to_dense() @ evecs - evecs * evals
    assert np.max(np.linalg.norm(res, axis=0)) < 1e-9 * 1.3
    assert np.all(np.diff(evals) >= 0)
    with pytest.raises(DenseCapExceededError, match="iterative"):
        exact_spectrum(H, cap=10)


def test_bipartite_spectrum_symmetric():
    H = build_sector_hamiltonian(enumerate_sector(SpinConfiguration.single_flip(6), Topology.ring_full(6)))
    evals, _ = exact_spectrum(H)
    assert np.allclose(evals, -evals[::-1], atol=1e-12)


@pytest.mark.parametrize("topo", [Topology.open(6, "right"), Topology.ring_full(6), Topology.ring_bond(6, "both")])
def test_projection_check_passes(topo):
    basis = enumerate_sector(SpinConfiguration.single_flip(6), topo)
    report = full_hamiltonian_projection_check(topo, CouplingSpec(), basis)
    assert report.passed and report.first_discrepancy() is None


def test_projection_check_locates_corruption():
    topo = Topology.open(6, "right")
    basis = enumerate_sector(SpinConfiguration.single_flip(6), topo)
    H = build_sector_hamiltonian(basis)
    m = H.matrix.tolil()
    m[2, 3] = -0.7
    bad = SectorHamiltonian(basis, H.coupling, m.tocsr())
    report = full_hamiltonian_projection_check(topo, CouplingSpec(), basis, hamiltonian=bad)
    assert not report.passed
    assert report.mismatches == [(2, 3, -0.5, -0.7)]
    assert "(2, 3)" in report.first_discrepancy()


def test_projection_check_reports_leak_for_truncated_basis():
    topo = Topology.open(6, "right")
    basis = enumerate_sector(SpinConfiguration.single_flip(6), topo)
    small = type(basis)(topo, basis.seed, basis.codes[:3], {int(c): i for i, c in enumerate(basis.codes[:3])})
    dense = build_sector_hamiltonian(basis).to_dense()[:3, :3]
    import scipy.sparse as sp

    H = SectorHamiltonian(small, CouplingSpec(), sp.csr_matrix(dense))
    report = full_hamiltonian_projection_check(topo, CouplingSpec(), small, hamiltonian=H)
    assert not report.passed and report.leaks


@pytest.mark.parametrize("n", range(3, 11))
def test_full_space_hermitian_every_variant(n):
    for topo in all_topologies(n):
        full = full_space_hamiltonian(topo)
        assert abs(full - full.T).nnz == 0


@pytest.mark.parametrize("n", [4, 7, 10])
def test_bulk_only_connects_equal_wall_counts(n):
    for topo in all_topologies(n):
        if topo.end_terms:
            continue
        coo = full_space_hamiltonian(topo).tocoo()
        for i, j in zip(coo.row, coo.col):
            assert wall_count(SpinConfiguration(n, int(i)), topo) == wall_count(SpinConfiguration(n, int(j)), topo)


@pytest.mark.parametrize("n", [4, 6, 9])
@pytest.mark.parametrize("ends", ["none", "left", "right", "both"])
def test_ring_bond_adds_only_cyclic_terms(n, ends):
    open_m = full_space_hamiltonian(Topology.open(n, ends)).tocoo()
    ring_m = full_space_hamiltonian(Topology.ring_bond(n, ends)).tocoo()
    open_set = set(zip(open_m.row.tolist(), open_m.col.tolist()))
    ring_set = set(zip(ring_m.row.tolist(), ring_m.col.tolist()))
    assert open_set <= ring_set
    for i, j in ring_set - open_set:
        flipped = i ^ j
        assert flipped in (1, 1 << (n - 1))
        c = SpinConfiguration(n, i)
        site = 1 if flipped == 1 else n
        nb = (n, 2) if site == 1 else (n - 1, 1)
        # the extra element comes from the bulk rule across the closing bond
        assert c.spin(nb[0]) != c.spin(nb[1])


def test_matrix_export_format():
    text = format_matrix(staircase(3))
    lines = text.splitlines()
    assert lines[0] == "D=3 nnz=2 h=1.00000000000e+00"
    assert lines[1:] == ["1 2 -5.00000000000e-01", "2 3 -5.00000000000e-01"]
