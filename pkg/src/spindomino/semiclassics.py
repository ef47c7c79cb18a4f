"""Discrete WKB for slowly varying tridiagonal chains.

A chain with on-site energies ``v_i`` and hoppings ``t_i`` is read as the
lattice symbol ``H(x, p) = v(x) - 2 |t(x)| cos p`` on the scaled coordinate
``x = i / D`` with ``1 / D`` playing the role of Planck's constant.  The
amplitudes vanish on the two phantom sites ``0`` and ``D + 1``, which act as
hard walls at ``x = 0`` and ``x = (D + 1) / D``.

Levels are quantized with the integrated density of states

    N(E) = (D / pi) * integral over the wall-to-wall domain of p_clip(x, E)

where ``p_clip`` is ``arccos((v - E) / (2|t|))`` inside the band, ``0`` below
it and ``pi`` above it.  Level ``m`` solves ``N(E) = m + mu(E)`` with ``mu``
the sum of two endpoint phases: 1/2 for an allowed region reaching a wall,
1/4 for a turning point at the lower band edge and 3/4 at the upper band
edge.  With two lower-edge turning points this is the usual
``D * loop integral of p dx = 2 pi (m + 1/2)`` rule.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolationError, StructureError
from .hamiltonian import SectorHamiltonian, exact_spectrum

BELOW, ALLOWED, ABOVE = 0, 1, 2
_ENDPOINT_PHASE = {BELOW: 0.25, ALLOWED: 0.5, ABOVE: 0.75}

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)
# cosine map on [0, 1]: clusters nodes at both ends, removes sqrt endpoint singularities
_S = 0.5 * (_GL_NODES + 1.0)
_U = 0.5 * (1.0 - np.cos(np.pi * _S))
_W = 0.5 * _GL_WEIGHTS * 0.5 * np.pi * np.sin(np.pi * _S)
_GL4_NODES, _GL4_WEIGHTS = np.polynomial.legendre.leggauss(4)
_GL4_U = 0.5 * (_GL4_NODES + 1.0)
_GL4_W = 0.5 * _GL4_WEIGHTS


@dataclass(frozen=True, eq=False)
class EffectiveChain:
    onsite: np.ndarray
    hopping: np.ndarray

    def __post_init__(self):
        onsite = np.asarray(self.onsite, dtype=float)
        hopping = np.asarray(self.hopping, dtype=float)
        if onsite.ndim != 1 or hopping.shape != (max(onsite.size - 1, 0),):
            raise ContractViolationError("need D on-site values and D-1 hoppings")
        if np.any(hopping == 0):
            raise ContractViolationError("hoppings must be nonzero")
        object.__setattr__(self, "onsite", onsite)
        object.__setattr__(self, "hopping", hopping)

    @classmethod
    def uniform(cls, D: int, h: float = 1.0) -> EffectiveChain:
        """The open staircase sector: zero on-site, hopping ``-h/2``."""
        return cls(np.zeros(D), np.full(D - 1, -0.5 * h))

    @property
    def dimension(self) -> int:
        return self.onsite.size

    @property
    def scaled_coordinate(self) -> np.ndarray:
        return np.arange(1, self.dimension + 1) / self.dimension

    def to_dense(self) -> np.ndarray:
        return np.diag(self.onsite) + np.diag(self.hopping, 1) + np.diag(self.hopping, -1)

    @property
    def energy_scale(self) -> float:
        return 2.0 * float(np.max(np.abs(self.hopping)))


def extract_effective_chain(H: SectorHamiltonian) -> EffectiveChain:
    """Read diagonal and first off-diagonal of a tridiagonal sector matrix."""
    coo = H.matrix.tocoo()
    nz = coo.data != 0
    if np.any(np.abs(coo.row[nz] - coo.col[nz]) > 1):
        raise StructureError(
            "sector matrix is not tridiagonal in its basis order; the semiclassical "
            "solver only applies to sectors whose dimension grows linearly with n"
        )
    dense = H.matrix
    onsite = dense.diagonal()
    hopping = dense.diagonal(1)
    if np.any(hopping == 0):
        raise StructureError("tridiagonal matrix decouples into blocks (zero hopping)")
    return EffectiveChain(np.asarray(onsite, dtype=float), np.asarray(hopping, dtype=float))


class _Symbol:
    """Piecewise-linear ``v(x)`` and ``|t(x)|`` on the half-site grid ``j / (2D)``."""

    def __init__(self, chain: EffectiveChain):
        D = chain.dimension
        self.D = D
        self.grid = np.arange(2 * D + 3) / (2 * D)
        x_sites = np.arange(1, D + 1) / D
        x_bonds = (np.arange(1, D) + 0.5) / D
        self.v = np.interp(self.grid, x_sites, chain.onsite)
        self.tau = np.interp(self.grid, x_bonds, np.abs(chain.hopping))
        self.lo = self.v - 2 * self.tau
        self.hi = self.v + 2 * self.tau
        self.width = 1.0 / (2 * D)
        # gauge factors mapping the |t| problem back onto the signed hoppings
        signs = np.concatenate([[1.0], np.cumprod(-np.sign(chain.hopping))])
        self.gauge = signs

    @property
    def e_range(self) -> tuple[float, float]:
        return float(self.lo.min()), float(self.hi.max())

    def pieces(self, E: np.ndarray, margin: float = 0.05, with_kappa: bool = True):
        """Per-cell integrals of ``p_clip`` and of the decay rate for each energy.

        Cells lying well inside or well outside the band use 4-point
        Gauss-Legendre.  Cells touching a band edge are split at the edge
        crossings (``v`` and ``|t|`` are linear inside a cell, so the crossings
        solve linear equations) and integrated with an end-clustered rule.

        Returns ``labels`` shaped ``(len(E), cells, 3)`` (BELOW/ALLOWED/ABOVE
        per piece, -1 for empty pieces), plus ``action`` and ``kappa`` shaped
        ``(len(E), cells)``.
        """
        E = np.asarray(E, dtype=float)[:, None]
        M, S = E.shape[0], self.grid.size - 1
        ratio_g = (self.v - E) / (2 * self.tau)
        r0, r1 = ratio_g[:, :-1], ratio_g[:, 1:]
        inner = 1.0 - margin
        cheap_allowed = (np.abs(r0) <= inner) & (np.abs(r1) <= inner)
        cheap_below = (r0 >= 1 + margin) & (r1 >= 1 + margin)
        cheap_above = (r0 <= -1 - margin) & (r1 <= -1 - margin)
        critical = ~(cheap_allowed | cheap_below | cheap_above)

        v0, v1 = self.v[:-1], self.v[1:]
        t0, t1 = self.tau[:-1], self.tau[1:]
        uq = _GL4_U
        vq = v0[:, None] + (v1 - v0)[:, None] * uq
        tq = t0[:, None] + (t1 - t0)[:, None] * uq
        rq = (vq[None] - E[..., None]) / (2 * tq[None])
        w = self.width * _GL4_W
        action = np.where(cheap_above, np.pi * self.width, 0.0)
        if cheap_allowed.any():
            action = np.where(cheap_allowed, np.arccos(np.clip(rq, -1, 1)) @ w, action)
        forbidden = cheap_below | cheap_above
        kappa = np.zeros((M, S))
        if with_kappa and forbidden.any():
            kappa = np.where(forbidden, (np.arccosh(np.maximum(np.abs(rq), 1)) * w).sum(-1), 0.0)
        labels = np.empty((M, S, 3), dtype=np.int8)
        labels[:] = np.where(cheap_allowed, ALLOWED, np.where(cheap_above, ABOVE, BELOW))[..., None]

        mi, si = np.nonzero(critical)
        if mi.size:
            Ec = E[mi, 0]
            a_v0, a_v1, a_t0, a_t1 = v0[si], v1[si], t0[si], t1[si]
            lo0, lo1 = a_v0 - 2 * a_t0, a_v1 - 2 * a_t1
            hi0, hi1 = a_v0 + 2 * a_t0, a_v1 + 2 * a_t1

            def root(b0, b1):
                with np.errstate(divide="ignore", invalid="ignore"):
                    u = (Ec - b0) / (b1 - b0)
                return np.where((u > 0) & (u < 1), u, 1.0)

            zeros = np.zeros_like(Ec)
            cuts = np.sort(np.stack([zeros, root(lo0, lo1), root(hi0, hi1), zeros + 1], -1), -1)
            ua, ub = cuts[:, :-1], cuts[:, 1:]
            length = ub - ua
            um = 0.5 * (ua + ub)
            vm = a_v0[:, None] + (a_v1 - a_v0)[:, None] * um
            tm = a_t0[:, None] + (a_t1 - a_t0)[:, None] * um
            Ecol = Ec[:, None]
            lab = np.where(Ecol < vm - 2 * tm, BELOW, np.where(Ecol > vm + 2 * tm, ABOVE, ALLOWED))
            lab = np.where(length > 0, lab, -1)
            u = ua[..., None] + length[..., None] * _U
            vq = a_v0[:, None, None] + (a_v1 - a_v0)[:, None, None] * u
            tq = a_t0[:, None, None] + (a_t1 - a_t0)[:, None, None] * u
            r = (vq - Ec[:, None, None]) / (2 * tq)
            qw = length[..., None] * _W * self.width
            p_int = (np.arccos(np.clip(r, -1, 1)) * qw).sum(-1)
            k_int = (np.arccosh(np.maximum(np.abs(r), 1)) * qw).sum(-1)
            act = np.where(lab == ALLOWED, p_int, np.where(lab == ABOVE, np.pi * length * self.width, 0.0))
            kap = np.where((lab == BELOW) | (lab == ABOVE), k_int, 0.0)
            action[mi, si] = act.sum(-1)
            kappa[mi, si] = kap.sum(-1)
            labels[mi, si] = lab
        return labels, action, kappa

    def classify_point(self, E: np.ndarray, j: int) -> np.ndarray:
        return np.where(E < self.lo[j], BELOW, np.where(E > self.hi[j], ABOVE, ALLOWED))

    def counting(self, E: np.ndarray, chunk: int = 128):
        """``N(E) - mu(E)``, ``mu(E)`` and the number of allowed components per energy."""
        E = np.asarray(E, dtype=float)
        N = np.empty(E.size)
        components = np.empty(E.size, dtype=int)
        for start in range(0, E.size, chunk):
            part = E[start : start + chunk]
            labels, action, _ = self.pieces(part, with_kappa=False)
            N[start : start + chunk] = self.D / np.pi * action.sum(-1)
            flat = labels.reshape(part.size, -1)
            components[start : start + chunk] = [_count_components(row) for row in flat]
        phases = np.array([_ENDPOINT_PHASE[BELOW], _ENDPOINT_PHASE[ALLOWED], _ENDPOINT_PHASE[ABOVE]])
        mu = phases[self.classify_point(E, 0)] + phases[self.classify_point(E, len(self.grid) - 1)]
        return N - mu, mu, components


def _count_components(labels: np.ndarray) -> int:
    row = labels[labels >= 0]
    allowed = row == ALLOWED
    return int(allowed[0]) + int(np.sum(allowed[1:] & ~allowed[:-1]))


@dataclass
class SemiclassicalSpectrum:
    """Approximate levels by quantum number; flagged levels carry no value."""

    dimension: int
    eigenvalues: np.ndarray
    quantum_numbers: np.ndarray
    flagged: list[int] = field(default_factory=list)
    method: dict = field(default_factory=dict)

    def level(self, m: int) -> float:
        hit = np.nonzero(self.quantum_numbers == m)[0]
        if hit.size == 0:
            raise KeyError(f"level {m} was flagged or not computed")
        return float(self.eigenvalues[hit[0]])


def wkb_spectrum(chain: EffectiveChain, tol: float = 1e-12) -> SemiclassicalSpectrum:
    """Solve the quantization condition for ``m = 0..D-1`` by bisection.

    ``tol`` is relative to the band scale ``2 max|t|``.  A level is flagged
    when its bracket collapses onto a jump of the endpoint phase or onto an
    energy with a disconnected allowed region.
    """
    D = chain.dimension
    if D < 4:
        raise ContractViolationError(f"semiclassical quantization needs D >= 4, got {D}")
    sym = _Symbol(chain)
    e_lo, e_hi = sym.e_range
    m = np.arange(D, dtype=float)
    lo = np.full(D, e_lo)
    hi = np.full(D, e_hi)
    abs_tol = tol * chain.energy_scale
    while np.max(hi - lo) > abs_tol:
        mid = 0.5 * (lo + hi)
        g, _, _ = sym.counting(mid)
        below = g < m
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    g_lo, mu_lo, comp_lo = sym.counting(lo)
    g_hi, mu_hi, comp_hi = sym.counting(hi)
    bad = (mu_lo != mu_hi) | (comp_lo != 1) | (comp_hi != 1) | (np.abs(g_hi - g_lo) > 1e-3)
    E = 0.5 * (lo + hi)
    # out-of-order roots come from non-monotone stretches of N - mu
    running = np.maximum.accumulate(np.where(bad, -np.inf, E))
    bad |= E < running
    keep = ~bad
    return SemiclassicalSpectrum(
        dimension=D,
        eigenvalues=E[keep],
        quantum_numbers=np.arange(D)[keep],
        flagged=[int(k) for k in np.nonzero(bad)[0]],
        method={
            "quantization": "integrated density of states with endpoint phases",
            "endpoint_phases": {"wall": 0.5, "lower_turning_point": 0.25, "upper_turning_point": 0.75},
            "turning_points": "linear connection, velocity floored at 2|t| D^(-1/3)",
            "root_finding": f"bisection, tol={abs_tol:.1e}",
        },
    )


def wkb_eigenvector(chain: EffectiveChain, m: int, spectrum: SemiclassicalSpectrum | None = None) -> np.ndarray:
    """Unit-norm WKB amplitude of level ``m`` on sites ``1..D``."""
    spectrum = wkb_spectrum(chain) if spectrum is None else spectrum
    if m in spectrum.flagged:
        raise StructureError(f"level {m} was flagged by the quantizer")
    return _eigenvector(_Symbol(chain), spectrum.level(m))


def _eigenvector(sym: _Symbol, E: float) -> np.ndarray:
    D = sym.D
    Ea = np.array([E])
    labels, action, kappa = sym.pieces(Ea)
    cell_action = action[0]
    cell_kappa = kappa[0]
    phi = D * np.concatenate([[0.0], np.cumsum(cell_action)])
    kc = D * np.concatenate([[0.0], np.cumsum(cell_kappa)])
    if _count_components(labels[0].ravel()) != 1:
        raise StructureError(f"allowed region at E={E:g} is not a single interval")

    sites = np.arange(1, D + 1)
    j = 2 * sites
    v, tau = sym.v[j], sym.tau[j]
    ratio = (v - E) / (2 * tau)
    cls = sym.classify_point(np.full(D, E), j)
    floor = 2 * tau * D ** (-1 / 3)
    vel_allowed = np.maximum(2 * tau * np.sin(np.arccos(np.clip(ratio, -1, 1))), floor)
    vel_forbidden = np.maximum(2 * tau * np.sinh(np.arccosh(np.maximum(np.abs(ratio), 1))), floor)
    allowed_sites = np.nonzero(cls == ALLOWED)[0]
    if allowed_sites.size < 2:
        raise StructureError(f"allowed region at E={E:g} covers fewer than two sites")
    first, last = allowed_sites[0], allowed_sites[-1]
    k_inside = kc[j[first]]
    c_left = _ENDPOINT_PHASE[int(sym.classify_point(Ea, 0)[0])]
    c_right = _ENDPOINT_PHASE[int(sym.classify_point(Ea, len(sym.grid) - 1)[0])]
    phi_total = phi[-1]

    def side(phase_from_wall, c, forbidden_mask, decay, stagger):
        psi = np.zeros(D)
        psi[allowed_sites] = np.cos(phase_from_wall[allowed_sites] - np.pi * c) / np.sqrt(vel_allowed[allowed_sites])
        sign = -stagger if c == 0.75 else np.ones(D)
        f = np.nonzero(forbidden_mask)[0]
        psi[f] = sign[f] * 0.5 * np.exp(-decay[f]) / np.sqrt(vel_forbidden[f])
        return psi

    stagger_left = (-1.0) ** sites
    stagger_right = (-1.0) ** (D + 1 - sites)
    left_mask = sites - 1 < first
    right_mask = sites - 1 > last
    psi_l = side(phi[j], c_left, left_mask, k_inside - kc[j], stagger_left)
    psi_r = side(phi_total - phi[j], c_right, right_mask, kc[j] - k_inside, stagger_right)
    overlap = np.dot(psi_l[allowed_sites], psi_r[allowed_sites])
    sigma = 1.0 if overlap >= 0 else -1.0
    mid = allowed_sites[allowed_sites.size // 2]
    psi = np.where(sites - 1 <= mid, psi_l, sigma * psi_r)
    psi = psi * sym.gauge
    psi /= np.linalg.norm(psi)
    if psi[np.argmax(np.abs(psi))] < 0:
        psi = -psi
    return psi


def wkb_eigensystem(chain: EffectiveChain) -> tuple[SemiclassicalSpectrum, np.ndarray]:
    """Spectrum plus a ``(D, levels)`` matrix of WKB eigenvectors for unflagged levels."""
    spectrum = wkb_spectrum(chain)
    sym = _Symbol(chain)
    vecs = np.column_stack([_eigenvector(sym, E) for E in spectrum.eigenvalues])
    return spectrum, vecs


def semiclassical_propagate(chain: EffectiveChain, psi0: np.ndarray, times) -> np.ndarray:
    """``(T, D)`` amplitudes from the WKB eigenpairs of ``chain``."""
    spectrum, vecs = wkb_eigensystem(chain)
    if spectrum.flagged:
        raise StructureError(f"levels {spectrum.flagged} flagged; WKB basis incomplete")
    coeffs = vecs.T @ np.asarray(psi0, dtype=complex)
    phases = np.exp(-1j * np.outer(np.asarray(times, dtype=float), spectrum.eigenvalues))
    return (phases * coeffs) @ vecs.T


@dataclass
class ConvergenceRow:
    D: int
    max_eig_error: float
    mean_overlap_deficit: float
    flagged_levels: int


def bulk_levels(D: int, width: float = 0.4) -> np.ndarray:
    m = np.arange(D)
    return m[np.abs(m / D - 0.5) < width]


def convergence_report(dimensions, chain_factory=None, h: float = 1.0) -> list[ConvergenceRow]:
    """WKB accuracy against dense diagonalization for each dimension.

    The overlap deficit ``1 - |<wkb|exact>|`` is averaged over bulk levels
    ``|m/D - 1/2| < 0.4``.
    """
    if chain_factory is None:
        chain_factory = lambda D: EffectiveChain.uniform(D, h)  # noqa: E731
    rows = []
    for D in dimensions:
        chain = chain_factory(int(D))
        exact_vals, exact_vecs = exact_spectrum(chain.to_dense())
        spectrum, vecs = wkb_eigensystem(chain)
        qn = spectrum.quantum_numbers
        err = np.abs(spectrum.eigenvalues - exact_vals[qn])
        overlaps = np.abs(np.sum(vecs * exact_vecs[:, qn], axis=0))
        bulk = np.isin(qn, bulk_levels(chain.dimension))
        rows.append(
            ConvergenceRow(
                D=chain.dimension,
                max_eig_error=float(err.max()) if err.size else float("nan"),
                mean_overlap_deficit=float(np.mean(1 - overlaps[bulk])) if bulk.any() else float("nan"),
                flagged_levels=len(spectrum.flagged),
            )
        )
    return rows


def convergence_trend_ok(rows: list[ConvergenceRow], floor: float = 0.0) -> bool:
    """Max error never rises from one dimension to the next by more than ``floor``."""
    errs = [r.max_eig_error for r in rows]
    return all(b <= a + floor for a, b in zip(errs, errs[1:]))


def convergence_csv(rows: list[ConvergenceRow]) -> str:
    lines = ["D,max_eig_error,mean_overlap_deficit,flagged_levels"]
    for r in rows:
        lines.append(f"{r.D},{r.max_eig_error:.11e},{r.mean_overlap_deficit:.11e},{r.flagged_levels}")
    return "\n".join(lines) + "\n"
