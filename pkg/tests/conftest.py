import numpy as np
import pytest

from rons import core


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_spd(rng, n, shift=None):
    """Random symmetric positive-definite matrix."""
    a = rng.standard_normal((n, n))
    return a @ a.T + (shift if shift is not None else n) * np.eye(n)


def quadratic_quantity(name, q_matrix):
    """I(a) = a^T Q a / 2 with its analytic gradient."""
    q_matrix = 0.5 * (q_matrix + q_matrix.T)
    return core.ConservedQuantity(
        name,
        value=lambda a: float(0.5 * a @ q_matrix @ a),
        gradient=lambda a: q_matrix @ a,
    )
