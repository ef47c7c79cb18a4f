"""Brute-force reference on the full ``2**n`` Hilbert space.

Only the flip rule (:func:`spindomino.basis.flip_mask`) is shared with the
sector path.  Matrices are indexed directly by configuration bits,
reachability uses scipy's graph BFS and propagation diagonalizes the full
matrix, so indexing mistakes in the sector code show up as disagreements.
Test-time use only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import breadth_first_order

from .basis import SpinConfiguration, Topology, flip_mask
from .errors import ContractViolationError, SizeGuardError
from .hamiltonian import CouplingSpec

MAX_ORACLE_SITES = 14
MAX_DENSE_ORACLE_SITES = 12


@dataclass
class FullSpaceState:
    n: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (2**self.n,):
            raise ContractViolationError("amplitude vector must have length 2**n")
        if abs(np.linalg.norm(self.amplitudes) - 1) > 1e-10:
            raise ContractViolationError("full-space state is not normalized")

    @classmethod
    def basis_state(cls, config: SpinConfiguration) -> FullSpaceState:
        psi = np.zeros(2**config.n, dtype=complex)
        psi[config.bits] = 1
        return cls(config.n, psi)


def _guard(n: int, limit: int):
    if n > limit:
        raise SizeGuardError(f"brute-force oracle limited to n <= {limit}, got {n}")


def full_space_hamiltonian(topology: Topology, coupling: CouplingSpec | None = None) -> sp.csr_matrix:
    """Flip Hamiltonian on all ``2**n`` configurations, indexed by bits."""
    _guard(topology.n, MAX_ORACLE_SITES)
    coupling = CouplingSpec() if coupling is None else coupling
    dim = 2**topology.n
    codes = np.arange(dim, dtype=np.uint64)
    masks = flip_mask(codes, topology)
    rows, cols = [], []
    for k in range(topology.n):
        bit = np.uint64(1 << k)
        src = codes[(masks & bit) != 0]
        rows.append(src)
        cols.append(src ^ bit)
    rows = np.concatenate(rows).astype(np.int64)
    cols = np.concatenate(cols).astype(np.int64)
    data = np.full(rows.size, coupling.element)
    return sp.csr_matrix((data, (rows, cols)), shape=(dim, dim))


def full_space_reachability(
    seed: SpinConfiguration,
    topology: Topology,
    H_full: sp.spmatrix | None = None,
) -> frozenset[SpinConfiguration]:
    """Configurations connected to ``seed`` through nonzero matrix elements."""
    _guard(topology.n, MAX_ORACLE_SITES)
    if H_full is None:
        H_full = full_space_hamiltonian(topology)
    order = breadth_first_order(H_full, seed.bits, directed=False, return_predecessors=False)
    return frozenset(SpinConfiguration(topology.n, int(c)) for c in order)


def full_space_spins(n: int) -> np.ndarray:
    """``(2**n, n)`` array of site spins for every configuration."""
    codes = np.arange(2**n)[:, None]
    return 2 * ((codes >> np.arange(n)) & 1) - 1


@dataclass
class FullSpaceTrajectory:
    times: np.ndarray
    amplitudes: np.ndarray  # (T, 2**n)
    profile: np.ndarray  # (T, n)
    total_polarization: np.ndarray
    norm: np.ndarray


def full_space_evolve(H_full, psi0: FullSpaceState, times) -> FullSpaceTrajectory:
    """Spectral propagation of ``psi0`` on the full space."""
    _guard(psi0.n, MAX_DENSE_ORACLE_SITES)
    dense = H_full.toarray() if sp.issparse(H_full) else np.asarray(H_full)
    times = np.asarray(times, dtype=float)
    evals, evecs = np.linalg.eigh(dense)
    coeffs = evecs.T @ psi0.amplitudes
    phases = np.exp(-1j * np.outer(times, evals))
    amps = (phases * coeffs) @ evecs.T
    probs = np.abs(amps) ** 2
    profile = probs @ full_space_spins(psi0.n)
    return FullSpaceTrajectory(
        times=times,
        amplitudes=amps,
        profile=profile,
        total_polarization=profile.sum(axis=1),
        norm=np.sqrt(probs.sum(axis=1)),
    )
