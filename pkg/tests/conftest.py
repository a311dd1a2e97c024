"""Session fixtures for the expensive runs shared between test modules."""

import numpy as np
import pytest

from wavemap_spectrum.blowup import analyze, evolve, make_initial_data
from wavemap_spectrum.contfrac import find_complex_eigenvalues, find_real_eigenvalues

REFERENCE = (1.0, -0.542466, -2.0, -3.398382, -4.765079, -6.102295, -7.297807,
          -7.765347, -8.853889, -10.1228208, -11.196495, -11.802614)
LAM1 = -0.5424663534


@pytest.fixture(scope="session")
def table_scan():
    return find_real_eigenvalues(-12.5, 1.5)


@pytest.fixture(scope="session")
def complex_upper():
    return find_complex_eigenvalues((-13.0, 2.0), (0.1, 5.0), (60, 30))


@pytest.fixture(scope="session")
def exact_run():
    s0 = make_initial_data("exact-self-similar", R=4.0, n=2000, T=1.0)
    return evolve(s0, cfl=0.5, t_end=1.0, snapshot_every=1)


@pytest.fixture(scope="session")
def dispersing_runs():
    out = {}
    for n in (600, 1200, 2400):
        s0 = make_initial_data("gaussian-lump", R=6.0, n=n, amplitude=0.5, width=1.0)
        out[n] = evolve(s0, cfl=0.5, t_end=8.0, snapshot_every=50)
    return out


@pytest.fixture(scope="session")
def large_run():
    s0 = make_initial_data("gaussian-lump", R=1.5, n=12000, amplitude=6.0, width=1.0)
    traj = evolve(s0, cfl=0.5, t_end=5.0, snapshot_every=2)
    return traj, analyze(traj, LAM1, rho=np.linspace(0.0, 1.0, 101))
