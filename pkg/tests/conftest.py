"""Shared fixtures: small grids, reference models, and one cached wave solve."""

import numpy as np
import pytest

from benwave import Family, Model, kdv_soliton, make_grid, newton_krylov_solve


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260815)


@pytest.fixture(scope="session")
def grid20():
    """The workhorse grid: 1024 modes on 20 * [-pi, pi)."""
    return make_grid(1024, 20.0)


@pytest.fixture(scope="session")
def kdv_model():
    return Model(Family.KDV, beta=1.0)


@pytest.fixture(scope="session")
def benjamin_model():
    return Model(Family.BENJAMIN, alpha=1.0, beta=1.0)


@pytest.fixture(scope="session")
def kdv_wave(grid20, kdv_model):
    """Converged local solitary wave at c = -1, shared across test modules."""
    seed = kdv_soliton(grid20, -1.0, 1.0)
    return newton_krylov_solve(kdv_model, -1.0, seed)


def mirror_defect(values: np.ndarray) -> float:
    """Max deviation from evenness about x = 0 on our grid layout.

    Node 0 sits at -pi*scale and is its own mirror image under periodicity;
    nodes j and n - j pair up for j >= 1.
    """
    return float(np.max(np.abs(values[1:] - values[1:][::-1])))
