import numpy as np
import pytest

from qdrepeater import CavityParams, resonant_coeffs


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)


def random_coeffs(rng, g_range=(0.2, 3.0), ks_range=(0.0, 0.3)):
    """Scattering coefficients at a random resonant working point."""
    g = rng.uniform(*g_range)
    ks = rng.uniform(*ks_range)
    gamma = rng.uniform(0.02, 0.5)
    return resonant_coeffs(CavityParams(g=g, kappa_s=ks, gamma=gamma))
