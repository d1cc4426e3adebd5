import math

import numpy as np
import pytest

from spectral_edge.equilibrium import solve_support
from spectral_edge.potential import GUE, QUARTIC, Potential, eynard_potential

P = np.polynomial.Polynomial


@pytest.fixture(scope="session")
def eq_gue():
    return solve_support(GUE)


@pytest.fixture(scope="session")
def eq_quartic():
    return solve_support(QUARTIC)


@pytest.fixture(scope="session")
def eynard_pot():
    return eynard_potential(3.0, 0.02)


@pytest.fixture(scope="session")
def eq_eynard(eynard_pot):
    return solve_support(eynard_pot)


def two_shelf_potential(mu1=4.5, d1=0.08, mu2=7.5, d2=0.08, q=2, shift=3.0) -> Potential:
    """Polynomial potential whose equilibrium measure is prescribed directly.

    The density prefactor is chosen as a positive polynomial with two
    near-double roots right of the support [-2, 2]; integrating the implied
    field and taking the polynomial part reconstructs a degree-10 potential
    whose tilted landscape has two competing detachment sites.  Regularity
    is automatic because the prefactor never vanishes.
    """
    roots = [mu1 + 1j * d1, mu1 - 1j * d1, mu2 + 1j * d2, mu2 - 1j * d2] + [-shift] * (2 * q)
    h0 = P.fromroots(roots)
    hc = h0.coef.real
    degh = len(hc) - 1
    K = degh + 4
    ck = np.zeros(K)
    ck[0] = 1.0
    for k in range(1, K):
        ck[k] = ck[k - 1] * (0.5 - k + 1) / k * (-1.0)
    polypart = np.zeros(degh + 2)
    inv_z_coeff = 0.0
    for jj in range(len(hc)):
        for k in range(K):
            m = jj + 1 - 2 * k
            if 0 <= m <= degh + 1:
                polypart[m] += hc[jj] * ck[k] * 4.0 ** k
            if m == -1:
                inv_z_coeff += hc[jj] * ck[k] * 4.0 ** k
    scale = -2.0 / inv_z_coeff
    V = P(polypart * scale).integ()
    return Potential(tuple(V.coef), label="two-shelf")


@pytest.fixture(scope="session")
def shelf_pot():
    return two_shelf_potential()


@pytest.fixture(scope="session")
def eq_shelf(shelf_pot):
    return solve_support(shelf_pot, seeds=[(-2.0, 2.0)])


_SAMPLE_SEEDS = {0.0: 70, 0.5: 71, 1.0: 72, 2.0: 73}
_sample_cache = {}


def edge_sample_400(a: float):
    """Shared 4000-draw spiked-Gaussian samples at n = 400, one per spike."""
    from spectral_edge.sampler import sample_gaussian_spiked

    if a not in _sample_cache:
        _sample_cache[a] = sample_gaussian_spiked(400, a, 4000, seed=_SAMPLE_SEEDS[a])
    return _sample_cache[a]


@pytest.fixture(scope="session")
def sample400():
    return edge_sample_400


def simpson_adaptive(f, lo, hi, tol=1e-12, depth=48):
    """Plain adaptive Simpson integration, used as an independent oracle."""

    def simpson(a, b):
        c = 0.5 * (a + b)
        return (b - a) / 6.0 * (f(a) + 4.0 * f(c) + f(b)), c

    def recurse(a, b, whole, d):
        c = 0.5 * (a + b)
        left, _ = simpson(a, c)
        right, _ = simpson(c, b)
        if d <= 0 or abs(left + right - whole) < 15.0 * tol:
            return left + right + (left + right - whole) / 15.0
        return recurse(a, c, left, d - 1) + recurse(c, b, right, d - 1)

    whole, _ = simpson(lo, hi)
    return recurse(lo, hi, whole, depth)


def gue_g_prime(z: float) -> float:
    """Closed-form log-potential derivative of the semicircle on [-2, 2]."""
    return 0.5 * (z - math.sqrt(z * z - 4.0))
