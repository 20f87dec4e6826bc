import numpy as np
import pytest

from fbmc_pevd.polymat import PolyMatrix, pm_parah


def random_pm(rng, rows, cols, n_lags, lag_min=0, real=False):
    c = rng.standard_normal((n_lags, rows, cols))
    if not real:
        c = c + 1j * rng.standard_normal((n_lags, rows, cols))
    return PolyMatrix(c, lag_min)


def random_parahermitian(rng, n=6, order=8, width=None):
    """``G G~`` for a random ``n x width`` G of order ``order // 2``."""
    width = 2 * n if width is None else width
    g = random_pm(rng, n, width, order // 2 + 1)
    r = g @ pm_parah(g)
    return r * (1 / np.sqrt(np.sum(np.abs(r.coeffs) ** 2)))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
