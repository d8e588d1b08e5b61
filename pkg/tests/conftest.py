import numpy as np
import pytest

from orliczmp import GFunctionSpec, make_gfunction
from orliczmp.orlicz_space import PeriodicGridFunction


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def example1_g():
    return make_gfunction("example1")


@pytest.fixture
def half_square():
    return GFunctionSpec(
        1,
        lambda x: 0.5 * np.einsum("...j,...j->...", x, x),
        lambda x: np.asarray(x, dtype=float),
        name="half_square",
    )


def example1_conjugate_exact(y1, y2):
    """Closed form for the conjugate of x^2 + (x-y)^4.

    Substituting w = (x, x - y) makes the function separable with conjugate
    w1^2/4 + (3/4) 4^(-1/3) |w2|^(4/3); transforming back gives the formula.
    """
    return (y1 + y2) ** 2 / 4.0 + 0.75 * 4.0 ** (-1.0 / 3.0) * np.abs(y2) ** (4.0 / 3.0)


def random_trig(rng, T, m, dim, n_modes=6, decay=2.0, amplitude=1.0):
    t = -T + (2.0 * T / m) * np.arange(m)
    vals = rng.standard_normal(dim)[None, :] * np.ones((m, 1))
    for k in range(1, n_modes + 1):
        w = np.pi * k * t / T
        vals += (np.cos(w)[:, None] * rng.standard_normal(dim)[None, :]
                 + np.sin(w)[:, None] * rng.standard_normal(dim)[None, :]) / k ** decay
    return PeriodicGridFunction(T, amplitude * vals)
