# tests/conftest.py

import numpy as np
import pytest

from kato_scat.opcalc.grid import Grid
from kato_scat.potential.oracle import step_zero
from kato_scat.potential.potential import Potential


@pytest.fixture
def zero_potential():
    return Potential.zero()


@pytest.fixture
def weak_well():
    """V = -1.9 on [0, 1]: Kato moment 0.95, no eigenvalues."""
    return Potential.step(-1.9, 1.0)


@pytest.fixture
def deep_well():
    """V = -3 on [0, 1]: one eigenvalue just below the threshold."""
    return Potential.step(-3.0, 1.0)


@pytest.fixture
def deep_well_k0():
    return step_zero(-3.0, 1.0, 0.25j)


@pytest.fixture
def short_grid():
    return Grid.build(1.0, 200, [1.0])


@pytest.fixture
def long_grid():
    """Grid long enough that the deep-well eigenfunction has decayed to ~1e-4 of its peak."""
    return Grid.build(40.0, 400, [1.0])


@pytest.fixture
def wave_grid():
    return Grid.build(20.0, 400, [1.0])


@pytest.fixture
def scattering_grid():
    """Room for band-limited test packets; the deep-well eigenfunction decays to ~1e-5 by X_max."""
    return Grid.build(40.0, 800, [1.0])


@pytest.fixture
def upper_ks():
    return [complex(re, im) for re in (-2.0, 0.0, 1.0, 2.5) for im in (0.3, 1.5)]


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
