"""Shared fixtures for the acceptance suite.

The membrane reference runs are expensive (the fine one is the quoted
101x101 configuration, plus one doubled grid for the refinement checks),
so they are built once per session and shared across criteria.
"""

import time

import numpy as np
import pytest

from kcontact import Grid, SimState, membrane, run

MU, GAMMA = 1.0, 0.2
OMEGA_D = np.sqrt(2 * MU ** 2 - GAMMA ** 2 / 4)  # sqrt(1.99)
T_END = 5.0


def membrane_exact(t, mesh):
    """Damped single-mode solution with u(0) = sin x sin y, u_t(0) = 0."""
    X, Y = mesh
    amp = np.exp(-GAMMA * t / 2) * (np.cos(OMEGA_D * t)
                                    + GAMMA / (2 * OMEGA_D)
                                    * np.sin(OMEGA_D * t))
    return (amp * np.sin(X) * np.sin(Y))[None]


def _membrane_run(model, N, output_every, t_end=T_END):
    grid = Grid(bounds=((0, np.pi), (0, np.pi)), counts=(N, N))
    mesh = grid.mesh()
    init = SimState(phi=membrane_exact(0.0, mesh),
                    phidot=np.zeros((1, N, N)), s1=np.zeros((N, N)))
    dt = 0.4 * grid.spacing[0]
    t0 = time.perf_counter()
    trace = run(model, grid, dt, t_end, init, output_every=output_every)
    return grid, trace, time.perf_counter() - t0


@pytest.fixture(scope="session")
def membrane_model():
    return membrane(mu=MU, gamma=GAMMA)


@pytest.fixture(scope="session")
def membrane_run_51(membrane_model):
    """Half-resolution companion of the reference run."""
    return _membrane_run(membrane_model, 51, output_every=8)


@pytest.fixture(scope="session")
def membrane_run_101(membrane_model):
    """The reference configuration: 101x101, dt = 0.4h, t_end = 5."""
    return _membrane_run(membrane_model, 101, output_every=8)


@pytest.fixture(scope="session")
def membrane_run_201_final(membrane_model):
    """Doubled grid, keeping only first/last frames (error ratio only)."""
    dt = 0.4 * (np.pi / 200)
    steps = int(round(T_END / dt))
    return _membrane_run(membrane_model, 201, output_every=steps)


@pytest.fixture(scope="session")
def membrane_undamped_run():
    """gamma = 0 companion for the energy-conservation criterion."""
    model = membrane(mu=MU, gamma=0.0)
    grid, trace, _ = _membrane_run(model, 101, output_every=20,
                                   t_end=10.0)
    return model, grid, trace
