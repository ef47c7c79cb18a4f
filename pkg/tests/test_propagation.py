import numpy as np
import pytest
import scipy.sparse as sp
from scipy.linalg import expm

from spindomino.errors import PropagationError
from spindomino.propagation import ChebyshevPropagator, gershgorin_radius, spectral_propagate


def random_symmetric(D, density=0.2, seed=0):
    rng = np.random.default_rng(seed)
    A = sp.random(D, D, density=density, random_state=rng)
    return (A + A.T).tocsr()


def test_gershgorin_bounds_spectrum():
    A = random_symmetric(40)
    assert np.max(np.abs(np.linalg.eigvalsh(A.toarray()))) <= gershgorin_radius(A) + 1e-12


@pytest.mark.parametrize("t", [0.3, 5.0, 80.0])
def test_chebyshev_matches_expm(t):
    A = random_symmetric(30, seed=1)
    psi = np.zeros(30, complex)
    psi[0] = 1
    prop = ChebyshevPropagator(A, tol=1e-12)
    got = list(prop.propagate(psi, [t]))[0]
    want = expm(-1j * t * A.toarray()) @ psi
    assert np.max(np.abs(got - want)) < 1e-9


def test_chebyshev_with_diagonal_shift():
    A = random_symmetric(20, seed=2) + sp.diags(np.linspace(1, 3, 20))
    psi = np.ones(20, complex) / np.sqrt(20)
    got = list(ChebyshevPropagator(A).propagate(psi, [2.0]))[0]
    assert np.max(np.abs(got - expm(-2j * A.toarray()) @ psi)) < 1e-9


def test_spectral_propagate_t0_exact():
    A = random_symmetric(10).toarray()
    evals, evecs = np.linalg.eigh(A)
    psi = np.arange(10) / np.linalg.norm(np.arange(10))
    out = list(spectral_propagate(evals, evecs, psi, [0.0, 1.0]))
    assert np.array_equal(out[0], psi.astype(complex))


def test_divergence_is_reported():
    A = sp.csr_matrix(np.array([[0.0, 1.0], [1.0, 0.0]]))
    prop = ChebyshevPropagator(A)
    prop.half_width = 0.1  # wrong bound: expansion diverges
    with pytest.raises(PropagationError):
        list(prop.propagate(np.array([1, 0], complex), [50.0]))
