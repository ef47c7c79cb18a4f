"""Quantum-domino spin amplification in spin chains with open and ring boundaries."""

__version__ = "0.1.0"

from .basis import (
    EndTerm,
    SectorBasis,
    SpinConfiguration,
    Topology,
    TopologyKind,
    allowed_flips,
    amplification_sector,
    enumerate_sector,
    sector_dimension_scan,
    wall_count,
)
from .dynamics import (
    EvolutionResult,
    SectorState,
    compare_topologies,
    evolve,
    ghz_fidelity,
    make_amplification_state,
    polarization_profile,
    total_polarization,
)
from .hamiltonian import CouplingSpec, SectorHamiltonian, build_sector_hamiltonian, exact_spectrum
from .semiclassics import EffectiveChain, convergence_report, extract_effective_chain, wkb_eigenvector, wkb_spectrum

__all__ = [
    "CouplingSpec",
    "EffectiveChain",
    "EndTerm",
    "EvolutionResult",
    "SectorBasis",
    "SectorHamiltonian",
    "SectorState",
    "SpinConfiguration",
    "Topology",
    "TopologyKind",
    "allowed_flips",
    "amplification_sector",
    "build_sector_hamiltonian",
    "compare_topologies",
    "convergence_report",
    "enumerate_sector",
    "evolve",
    "exact_spectrum",
    "extract_effective_chain",
    "ghz_fidelity",
    "make_amplification_state",
    "polarization_profile",
    "sector_dimension_scan",
    "total_polarization",
    "wall_count",
    "wkb_eigenvector",
    "wkb_spectrum",
]
