"""Time evolution inside a sector and the polarization observables."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .basis import (
    DEFAULT_SECTOR_CAP,
    SectorBasis,
    SpinConfiguration,
    Topology,
    enumerate_sector,
    format_end_terms,
)
from .errors import ContractViolationError, PropagationError, SectorTooLargeError
from .hamiltonian import DEFAULT_DENSE_CAP, CouplingSpec, SectorHamiltonian, build_sector_hamiltonian, exact_spectrum
from .propagation import ChebyshevPropagator, spectral_propagate

logger = logging.getLogger(__name__)

NORM_TOL = 1e-10
# states are kept in EvolutionResult only below this many stored amplitudes
KEEP_STATES_LIMIT = 5_000_000


@dataclass(eq=False)
class SectorState:
    """Normalized amplitudes over a sector basis.

    ``target`` optionally records the ``(alpha, beta)`` amplification input
    the state was prepared from; :func:`evolve` uses it for the GHZ fidelity.
    """

    basis: SectorBasis
    amplitudes: np.ndarray
    target: tuple[complex, complex] | None = None

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (self.basis.dimension,):
            raise ContractViolationError(
                f"expected {self.basis.dimension} amplitudes, got shape {self.amplitudes.shape}"
            )
        norm = np.linalg.norm(self.amplitudes)
        if abs(norm - 1) > NORM_TOL:
            raise ContractViolationError(f"state norm {norm:.15g} differs from 1")

    @classmethod
    def basis_state(cls, basis: SectorBasis, config: SpinConfiguration) -> SectorState:
        psi = np.zeros(basis.dimension, dtype=complex)
        psi[basis.index_of(config)] = 1
        return cls(basis, psi)

    def amplitude(self, config: SpinConfiguration) -> complex:
        i = self.basis.index.get(config.bits) if config.n == self.basis.n else None
        return 0j if i is None else complex(self.amplitudes[i])


def make_amplification_state(
    basis: SectorBasis,
    alpha: complex,
    beta: complex,
    excited: SpinConfiguration | None = None,
) -> SectorState:
    """``alpha |d...d> + beta |u d...d>`` (or ``beta`` on a custom excited state)."""
    if abs(abs(alpha) ** 2 + abs(beta) ** 2 - 1) > 1e-12:
        raise ContractViolationError(f"|alpha|^2 + |beta|^2 must be 1, got alpha={alpha}, beta={beta}")
    n = basis.n
    down = SpinConfiguration.all_down(n)
    excited = SpinConfiguration.single_flip(n) if excited is None else excited
    missing = [str(c) for c in (down, excited) if c not in basis]
    if missing:
        raise ContractViolationError(f"basis lacks required configurations: {', '.join(missing)}")
    psi = np.zeros(basis.dimension, dtype=complex)
    psi[basis.index_of(down)] += alpha
    psi[basis.index_of(excited)] += beta
    return SectorState(basis, psi, target=(complex(alpha), complex(beta)))


def _profile(basis: SectorBasis, amplitudes: np.ndarray) -> np.ndarray:
    probs = np.abs(amplitudes) ** 2
    return probs @ basis.spins


def polarization_profile(state: SectorState) -> np.ndarray:
    """Site polarizations ``<sigma_z^k>`` for ``k = 1..n``."""
    return _profile(state.basis, state.amplitudes)


def total_polarization(state: SectorState) -> float:
    return float(polarization_profile(state).sum())


def _ghz_indices(basis: SectorBasis) -> tuple[int | None, int | None]:
    n = basis.n
    return basis.index.get(0), basis.index.get((1 << n) - 1)


def _fidelity(amps: np.ndarray, i_down, i_up, alpha: complex, beta: complex) -> float:
    overlap = 0j
    if i_down is not None:
        overlap += np.conj(alpha) * amps[i_down]
    if i_up is not None:
        overlap += np.conj(beta) * amps[i_up]
    return float(min(abs(overlap) ** 2, 1.0))


def ghz_fidelity(state: SectorState, alpha: complex, beta: complex) -> float:
    """``|conj(alpha) <d..d|psi> + conj(beta) <u..u|psi>|**2``."""
    return _fidelity(state.amplitudes, *_ghz_indices(state.basis), alpha, beta)


@dataclass(eq=False)
class EvolutionResult:
    hamiltonian: SectorHamiltonian
    times: np.ndarray
    profile: np.ndarray  # (T, n)
    total_polarization: np.ndarray
    ghz_fidelity: np.ndarray
    norm: np.ndarray
    energy: np.ndarray
    alpha: complex
    beta: complex
    method: str
    states: list[SectorState] | None = field(default=None, repr=False)
    # largest |norm - 1| seen inside the propagator before renormalization
    propagator_drift: float = 0.0

    @property
    def basis(self) -> SectorBasis:
        return self.hamiltonian.basis

    @property
    def max_norm_drift(self) -> float:
        return max(float(np.max(np.abs(self.norm - 1.0))), self.propagator_drift)

    @property
    def max_energy_drift(self) -> float:
        return float(np.max(np.abs(self.energy - self.energy[0])))


def default_times(n: int, h: float = 1.0, samples: int | None = None, tmax: float | None = None) -> np.ndarray:
    """Grid ``[0, 10 n / h]`` with ``20 n`` samples unless overridden."""
    tmax = 10.0 * n / h if tmax is None else tmax
    samples = 20 * n if samples is None else samples
    return np.linspace(0.0, tmax, samples)


def _check_times(times) -> np.ndarray:
    times = np.asarray(times, dtype=float).ravel()
    if times.size == 0:
        raise ContractViolationError("time grid is empty")
    if times[0] < 0 or np.any(np.diff(times) < 0):
        raise ContractViolationError("times must be ascending and start at t >= 0")
    return times


def evolve(
    H: SectorHamiltonian,
    psi0: SectorState,
    times,
    *,
    method: str = "auto",
    dense_cap: int = DEFAULT_DENSE_CAP,
    tol: float = 1e-10,
    target: tuple[complex, complex] | None = None,
    keep_states: bool | None = None,
) -> EvolutionResult:
    """Propagate ``psi0`` under ``H`` and record the observables at ``times``.

    ``method`` is ``"dense"`` (spectral), ``"chebyshev"`` (iterative) or
    ``"auto"``, which picks dense up to ``dense_cap`` states.
    """
    if psi0.basis is not H.basis and psi0.basis.ordering_hash() != H.basis.ordering_hash():
        raise ContractViolationError("state and Hamiltonian live on different bases")
    times = _check_times(times)
    basis = H.basis
    D = basis.dimension
    if method == "auto":
        method = "dense" if D <= dense_cap else "chebyshev"
    propagator = None
    if method == "dense":
        evals, evecs = exact_spectrum(H, cap=max(dense_cap, D))
        stream = spectral_propagate(evals, evecs, psi0.amplitudes, times)
    elif method == "chebyshev":
        propagator = ChebyshevPropagator(H.matrix, tol=tol)
        stream = propagator.propagate(psi0.amplitudes, times)
    else:
        raise ContractViolationError(f"unknown propagation method {method!r}")

    if target is None:
        target = psi0.target
    if target is None:
        target = (
            psi0.amplitude(SpinConfiguration.all_down(basis.n)),
            psi0.amplitude(SpinConfiguration.single_flip(basis.n)),
        )
    alpha, beta = target
    if keep_states is None:
        keep_states = D * times.size <= KEEP_STATES_LIMIT

    T, n = times.size, basis.n
    profile = np.empty((T, n))
    fid = np.empty(T)
    norm = np.empty(T)
    energy = np.empty(T)
    states = [] if keep_states else None
    i_down, i_up = _ghz_indices(basis)
    for k, amps in enumerate(stream):
        if not np.all(np.isfinite(amps)):
            raise PropagationError(f"non-finite amplitudes at t={times[k]:g}")
        profile[k] = _profile(basis, amps)
        fid[k] = _fidelity(amps, i_down, i_up, alpha, beta)
        norm[k] = np.linalg.norm(amps)
        energy[k] = H.energy(amps)
        if keep_states:
            states.append(SectorState(basis, amps, target=target))
    return EvolutionResult(
        hamiltonian=H,
        times=times,
        profile=profile,
        total_polarization=profile.sum(axis=1),
        ghz_fidelity=fid,
        norm=norm,
        energy=energy,
        alpha=complex(alpha),
        beta=complex(beta),
        method=method,
        states=states,
        propagator_drift=0.0 if propagator is None else propagator.max_drift,
    )


@dataclass
class TopologyComparison:
    n: int
    times: np.ndarray
    m_open: np.ndarray
    m_ring_bond: np.ndarray
    m_ring_full: np.ndarray
    dimensions: dict[str, int | None]
    # (norm drift, energy drift) per closure that was run
    drifts: dict[str, tuple[float, float]] = field(default_factory=dict)

    @property
    def delta(self) -> np.ndarray:
        """``|M_open - M_ring_full| / n``."""
        return np.abs(self.m_open - self.m_ring_full) / self.n

    @property
    def delta_ring_bond(self) -> np.ndarray:
        return np.abs(self.m_open - self.m_ring_bond) / self.n

    @property
    def max_delta(self) -> float:
        return float(self.delta.max())


def compare_topologies(
    n: int,
    coupling: CouplingSpec | None = None,
    end_terms="right",
    times=None,
    *,
    ring_bond_cap: int = 100_000,
    dense_cap: int = DEFAULT_DENSE_CAP,
) -> TopologyComparison:
    """Total polarization from ``u d^(n-1)`` under open, ring-bond and ring-full closures.

    The ring-bond sector can grow like ``2**n``; above ``ring_bond_cap`` states
    its column is filled with NaN.
    """
    coupling = CouplingSpec() if coupling is None else coupling
    times = default_times(n, coupling.h) if times is None else _check_times(times)
    seed = SpinConfiguration.single_flip(n)
    runs = {
        "open": (Topology.open(n, end_terms), DEFAULT_SECTOR_CAP),
        "ring-bond": (Topology.ring_bond(n, end_terms), ring_bond_cap),
        "ring-full": (Topology.ring_full(n), DEFAULT_SECTOR_CAP),
    }
    series: dict[str, np.ndarray] = {}
    dims: dict[str, int | None] = {}
    drifts: dict[str, tuple[float, float]] = {}
    for name, (topo, cap) in runs.items():
        try:
            basis = enumerate_sector(seed, topo, cap=cap)
        except SectorTooLargeError:
            if name != "ring-bond":
                raise
            logger.warning("ring-bond sector for n=%d exceeds %d states; column skipped", n, cap)
            series[name] = np.full(times.size, np.nan)
            dims[name] = None
            continue
        H = build_sector_hamiltonian(basis, coupling)
        res = evolve(H, SectorState.basis_state(basis, seed), times, dense_cap=dense_cap, keep_states=False)
        series[name] = res.total_polarization
        dims[name] = basis.dimension
        drifts[name] = (res.max_norm_drift, res.max_energy_drift)
    return TopologyComparison(n, times, series["open"], series["ring-bond"], series["ring-full"], dims, drifts)


def fmt(x: float) -> str:
    """Fixed 12-significant-digit scientific notation."""
    if np.isnan(x):
        return "nan"
    return f"{x:.11e}"


def evolution_csv(result: EvolutionResult) -> str:
    n = result.basis.n
    lines = [",".join(["t", "M", "F"] + [f"p{k}" for k in range(1, n + 1)])]
    for t, m, f, p in zip(result.times, result.total_polarization, result.ghz_fidelity, result.profile):
        lines.append(",".join([fmt(t), fmt(m), fmt(f)] + [fmt(v) for v in p]))
    return "\n".join(lines) + "\n"


def _rounded(values) -> list:
    return [float(fmt(v)) if np.isfinite(v) else None for v in np.ravel(values)]


def evolution_metadata(result: EvolutionResult) -> dict:
    topo = result.basis.topology
    return {
        "n": topo.n,
        "topology": topo.kind.value,
        "endterms": format_end_terms(topo.end_terms),
        "h": result.hamiltonian.coupling.h,
        "alpha": [result.alpha.real, result.alpha.imag],
        "beta": [result.beta.real, result.beta.imag],
        "D": result.basis.dimension,
        "basis_hash": result.basis.ordering_hash(),
        "method": result.method,
    }


def evolution_json(result: EvolutionResult) -> str:
    payload = {
        "metadata": evolution_metadata(result),
        "t": _rounded(result.times),
        "M": _rounded(result.total_polarization),
        "F": _rounded(result.ghz_fidelity),
        "profile": [_rounded(row) for row in result.profile],
    }
    return json.dumps(payload, indent=1, sort_keys=True) + "\n"


def comparison_csv(cmp: TopologyComparison) -> str:
    lines = ["t,M_open,M_ring_bond,M_ring_full,delta,delta_ring_bond"]
    for row in zip(cmp.times, cmp.m_open, cmp.m_ring_bond, cmp.m_ring_full, cmp.delta, cmp.delta_ring_bond):
        lines.append(",".join(fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def comparison_json(cmp: TopologyComparison) -> str:
    payload = {
        "n": cmp.n,
        "dimensions": cmp.dimensions,
        "t": _rounded(cmp.times),
        "M_open": _rounded(cmp.m_open),
        "M_ring_bond": _rounded(cmp.m_ring_bond),
        "M_ring_full": _rounded(cmp.m_ring_full),
        "delta": _rounded(cmp.delta),
        "delta_ring_bond": _rounded(cmp.delta_ring_bond),
    }
    return json.dumps(payload, indent=1, sort_keys=True) + "\n"


def summarize(comparisons: Sequence[TopologyComparison]) -> list[tuple[int, float, float]]:
    """``(n, max_t delta, max_t delta_ring_bond)`` per comparison."""
    out = []
    for c in comparisons:
        rb = c.delta_ring_bond
        out.append((c.n, c.max_delta, float(np.nanmax(rb)) if np.isfinite(rb).any() else float("nan")))
    return out
