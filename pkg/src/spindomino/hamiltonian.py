"""Domino flip Hamiltonian restricted to a reachable sector."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .basis import SectorBasis, Topology, flip_mask
from .errors import ClosureViolationError, ContractViolationError, DenseCapExceededError, SizeGuardError

DEFAULT_DENSE_CAP = 4000


@dataclass(frozen=True)
class CouplingSpec:
    """Energy scale of the flip terms; every allowed flip has element ``-h/2``."""

    h: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.h) and self.h > 0):
            raise ContractViolationError(f"coupling h must be finite and > 0, got {self.h}")

    @property
    def element(self) -> float:
        return -0.5 * self.h


@dataclass(frozen=True, eq=False)
class SectorHamiltonian:
    basis: SectorBasis
    coupling: CouplingSpec
    matrix: sp.csr_matrix = field(repr=False)

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def entries(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Upper-triangle ``(row, col, value)`` arrays, 0-indexed, sorted by (row, col)."""
        upper = sp.triu(self.matrix, k=0).tocoo()
        order = np.lexsort((upper.col, upper.row))
        return upper.row[order], upper.col[order], upper.data[order]

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def energy(self, amplitudes: np.ndarray) -> float:
        return float(np.real(np.vdot(amplitudes, self.matrix @ amplitudes)))


def sector_flip_targets(basis: SectorBasis) -> tuple[np.ndarray, np.ndarray]:
    """Row/column index pairs, one per allowed flip of each basis state."""
    topo = basis.topology
    codes = basis.codes
    masks = flip_mask(codes, topo)
    sorter = np.argsort(codes, kind="stable")
    sorted_codes = codes[sorter]
    rows, cols = [], []
    for k in range(topo.n):
        bit = np.uint64(1 << k)
        sel = np.nonzero(masks & bit)[0]
        if sel.size == 0:
            continue
        targets = codes[sel] ^ bit
        pos = np.searchsorted(sorted_codes, targets)
        pos = np.minimum(pos, len(codes) - 1)
        found = sorted_codes[pos] == targets
        if not found.all():
            bad = int(targets[~found][0])
            raise ClosureViolationError(
                f"flip of site {k + 1} leads to {bad:#x}, which is missing from the basis"
            )
        rows.append(sel)
        cols.append(sorter[pos])
    if not rows:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty
    return np.concatenate(rows), np.concatenate(cols)


def build_sector_hamiltonian(basis: SectorBasis, coupling: CouplingSpec | None = None) -> SectorHamiltonian:
    coupling = CouplingSpec() if coupling is None else coupling
    rows, cols = sector_flip_targets(basis)
    D = basis.dimension
    data = np.full(rows.size, coupling.element)
    matrix = sp.csr_matrix((data, (rows, cols)), shape=(D, D))
    matrix.sort_indices()
    return SectorHamiltonian(basis, coupling, matrix)


def exact_spectrum(H: SectorHamiltonian | np.ndarray, cap: int = DEFAULT_DENSE_CAP):
    """Dense diagonalization; returns ascending eigenvalues and orthonormal columns."""
    dense = H.to_dense() if isinstance(H, SectorHamiltonian) else np.asarray(H, dtype=float)
    D = dense.shape[0]
    if D > cap:
        raise DenseCapExceededError(
            f"dimension {D} exceeds the dense cap {cap}; use the iterative propagator "
            "or the semiclassical solver"
        )
    evals, evecs = np.linalg.eigh(dense)
    return evals, evecs


@dataclass
class ProjectionReport:
    passed: bool
    dimension: int
    mismatches: list[tuple[int, int, float, float]] = field(default_factory=list)
    leaks: list[tuple[int, int, float]] = field(default_factory=list)

    def first_discrepancy(self) -> str | None:
        if self.mismatches:
            i, j, want, got = self.mismatches[0]
            return f"entry ({i}, {j}): full-space {want:g}, sector {got:g}"
        if self.leaks:
            i, c, v = self.leaks[0]
            return f"state {i} couples to outside configuration {c:#x} with {v:g}"
        return None

    def __bool__(self) -> bool:
        return self.passed


def full_hamiltonian_projection_check(
    topology: Topology,
    coupling: CouplingSpec,
    basis: SectorBasis,
    hamiltonian: SectorHamiltonian | None = None,
    max_report: int = 20,
) -> ProjectionReport:
    """Compare the sector matrix with the full-space matrix projected onto the sector."""
    from .oracle import MAX_ORACLE_SITES, full_space_hamiltonian

    if topology.n > MAX_ORACLE_SITES:
        raise SizeGuardError(f"projection check needs n <= {MAX_ORACLE_SITES}")
    if hamiltonian is None:
        hamiltonian = build_sector_hamiltonian(basis, coupling)
    full = full_space_hamiltonian(topology, coupling).tocsr()
    codes = basis.codes.astype(np.int64)
    block = full[codes][:, codes].toarray()
    sector = hamiltonian.to_dense()
    report = ProjectionReport(True, basis.dimension)
    bad = np.argwhere(~np.isclose(block, sector, rtol=0, atol=1e-14))
    for i, j in bad[:max_report]:
        report.mismatches.append((int(i), int(j), float(block[i, j]), float(sector[i, j])))
    outside = np.ones(full.shape[0], dtype=bool)
    outside[codes] = False
    leak = full[codes][:, np.nonzero(outside)[0]].tocoo()
    cols_out = np.nonzero(outside)[0]
    for i, j, v in list(zip(leak.row, leak.col, leak.data))[:max_report]:
        report.leaks.append((int(i), int(cols_out[j]), float(v)))
    report.passed = bad.size == 0 and leak.nnz == 0
    return report


def format_matrix(H: SectorHamiltonian) -> str:
    """Coordinate text: header, then 1-indexed upper-triangle ``i j value`` lines."""
    rows, cols, vals = H.entries()
    lines = [f"D={H.dimension} nnz={rows.size} h={H.coupling.h:.11e}"]
    lines.extend(f"{i + 1} {j + 1} {v:.11e}" for i, j, v in zip(rows, cols, vals))
    return "\n".join(lines) + "\n"
