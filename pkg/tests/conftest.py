"""Shared fixtures for reduction-engine tests."""

from fractions import Fraction

import numpy as np
import pytest

from engine.integrate import IntegratorConfig, sample_times
from engine.parser import parse_poly
from engine.reduction import (direct_trajectory, lift_and_reconstruct,
                              moving_line_reconstruction)
from engine.systems import builtin

K = Fraction(1, 2)
T_SPAN = (0.0, 10.0)


# --- Systems ---

@pytest.fixture(scope="session")
def elliptic():
    """Elliptic particle at k = 1/2 (exact)."""
    return builtin('elliptic', K)


@pytest.fixture(scope="session")
def linear_gravity():
    return builtin('linear-gravity')


@pytest.fixture(scope="session")
def free_particle():
    return builtin('free-particle')


@pytest.fixture(scope="session")
def halfplane():
    return builtin('halfplane-demo')


@pytest.fixture
def momenta():
    """j1, j2, j3 of the SE(2) action as polynomials in x, y, px, py."""
    return [parse_poly(text, 2) for text in ('px', 'py', 'y*px - x*py')]


# --- Runs on the standard initial condition (-1, 0, 0, 1) ---

@pytest.fixture(scope="session")
def start():
    return np.array([-1.0, 0.0, 0.0, 1.0])


@pytest.fixture(scope="session")
def grid():
    """1001 samples on [0, 10]."""
    return sample_times(T_SPAN, 1001)


@pytest.fixture(scope="session")
def tight():
    return IntegratorConfig(abs_tol=1e-10, rel_tol=1e-10)


@pytest.fixture(scope="session")
def direct(elliptic, start, grid, tight):
    """Direct integration of X_h, the oracle for every reconstruction."""
    return direct_trajectory(elliptic, start, T_SPAN, tight, grid)


@pytest.fixture(scope="session")
def line_result(elliptic, start, grid, tight):
    return moving_line_reconstruction(elliptic, start, T_SPAN, tight, grid)


@pytest.fixture(scope="session")
def second_result(elliptic, start, grid, tight):
    return lift_and_reconstruct(elliptic, start, T_SPAN, tight, grid)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
