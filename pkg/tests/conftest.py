import importlib.util
import pathlib
import sys

if importlib.util.find_spec("fblin") is None:
    sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

import numpy as np
import pytest

from fblin import benchmark_design, benchmark_system, equilibrium_data, solve_pinning


@pytest.fixture(scope="session")
def bench():
    return benchmark_system()


@pytest.fixture(scope="session")
def bench_blackbox():
    return benchmark_system(mode="black_box")


@pytest.fixture(scope="session")
def design():
    return benchmark_design()


@pytest.fixture(scope="session")
def pinning(bench, design):
    return solve_pinning(equilibrium_data(bench), design)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240517)
