import pytest

from kppfront.inner import solve_inner
from kppfront.wave import solve_wave


@pytest.fixture(scope="session")
def wave():
    return solve_wave()


@pytest.fixture(scope="session")
def inner(wave):
    return solve_inner(wave)


@pytest.fixture(scope="session")
def run100():
    from kppfront.solver import SimulationConfig, run

    return run(SimulationConfig(t_final=100.0, levels=(0.1, 0.5, 0.9), snapshots=(100.0,)))
