import sys

import numpy as np
import pytest

from escqkd import frames


@pytest.fixture(scope="session")
def icosahedral():
    return frames.build_icosahedral_code()


@pytest.fixture(scope="session")
def tetrahedron():
    return frames.solve_grassmann_frame(2, 4, frames.SolverConfig(seed=0))


def random_ensemble(rng, n, d):
    v = rng.standard_normal((n, d)) + 1j * rng.standard_normal((n, d))
    return frames.Ensemble.from_unnormalized(v)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[num])
