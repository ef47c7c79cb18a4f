"""Propagators for ``exp(-i H t) psi`` on real symmetric matrices."""

from __future__ import annotations

from typing import Iterator

import numpy as np
import scipy.sparse as sp
from scipy.special import jv

from .errors import PropagationError

MAX_DRIFT = 1e-8


def spectral_propagate(evals: np.ndarray, evecs: np.ndarray, psi0: np.ndarray, times) -> Iterator[np.ndarray]:
    """Exact propagation in the eigenbasis; yields one state per time."""
    psi0 = np.asarray(psi0, dtype=complex)
    coeffs = evecs.T @ psi0
    for t in times:
        if t == 0:
            yield psi0.copy()
        else:
            yield evecs @ (np.exp(-1j * evals * t) * coeffs)


def gershgorin_radius(matrix) -> float:
    """Upper bound on the spectral radius of a zero-diagonal symmetric matrix."""
    absm = abs(matrix)
    row_sums = np.asarray(absm.sum(axis=1)).ravel()
    return float(row_sums.max()) if row_sums.size else 0.0


class ChebyshevPropagator:
    """Chebyshev expansion of the time-evolution operator.

    The spectrum is mapped into ``[-1, 1]`` with a Gershgorin bound; each step
    keeps Bessel coefficients until the discarded tail is below ``tol``.
    """

    def __init__(self, matrix, tol: float = 1e-10, max_phase: float = 200.0):
        self.matrix = sp.csr_matrix(matrix)
        diag = self.matrix.diagonal()
        self.center = 0.5 * (diag.max() + diag.min()) if diag.size else 0.0
        shifted = self.matrix - self.center * sp.identity(self.matrix.shape[0], format="csr")
        self.half_width = gershgorin_radius(shifted) * 1.01 + 1e-12
        self._shifted = shifted
        self.tol = tol
        self.max_phase = max_phase
        self.matvecs = 0
        self.max_drift = 0.0

    def _coefficients(self, a: float) -> np.ndarray:
        kmax = int(a + 30 + 6 * a ** (1 / 3))
        while True:
            k = np.arange(kmax + 1)
            j = jv(k, a)
            tail = np.abs(j[int(a) + 1 :])
            # |J_k(a)| decays super-exponentially once k > a
            if tail.size and tail[-1] < 1e-3 * self.tol:
                break
            kmax *= 2
        big = np.nonzero(np.abs(j) > 0.25 * self.tol)[0]
        K = int(big[-1]) + 2 if big.size else 1
        c = 2.0 * ((-1j) ** k[:K]) * j[:K]
        c[0] = j[0]
        return c

    def step(self, psi: np.ndarray, dt: float) -> np.ndarray:
        if dt == 0:
            return psi.copy()
        a = self.half_width * dt
        c = self._coefficients(a)
        op = self._shifted
        w = self.half_width
        t_prev = psi
        out = c[0] * t_prev
        if len(c) > 1:
            t_cur = (op @ psi) / w
            self.matvecs += 1
            out = out + c[1] * t_cur
            for ck in c[2:]:
                t_next = 2.0 * (op @ t_cur) / w - t_prev
                self.matvecs += 1
                out += ck * t_next
                t_prev, t_cur = t_cur, t_next
        return np.exp(-1j * self.center * dt) * out

    def propagate(self, psi0: np.ndarray, times) -> Iterator[np.ndarray]:
        """Yield the state at each (ascending) time, renormalizing after each step."""
        psi = np.asarray(psi0, dtype=complex)
        self.max_drift = 0.0
        t_now = 0.0
        for t in times:
            remaining = t - t_now
            nsub = int(np.ceil(remaining * self.half_width / self.max_phase)) if remaining > 0 else 0
            for _ in range(nsub):
                dt = remaining / nsub
                psi = self.step(psi, dt)
                if not np.all(np.isfinite(psi)):
                    raise PropagationError(f"non-finite amplitudes near t={t_now + dt:g}")
                norm = np.linalg.norm(psi)
                drift = abs(norm - 1.0)
                self.max_drift = max(self.max_drift, drift)
                if drift > MAX_DRIFT:
                    raise PropagationError(
                        f"norm drift {drift:.3e} exceeds {MAX_DRIFT:g} at t={t_now + dt:g}"
                    )
                psi = psi / norm
                t_now += dt
            t_now = t
            yield psi
