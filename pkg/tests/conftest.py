import numpy as np
import pytest
from hypothesis import settings

from qrf.analysis import packaged_model
from qrf.physical import build_physical_space

settings.register_profile("qrf", deadline=None, max_examples=60)
settings.load_profile("qrf")

MODEL_NAMES = ("qutrit", "windowed", "z8")


@pytest.fixture(scope="session")
def models():
    return {name: packaged_model(name) for name in MODEL_NAMES}


@pytest.fixture(scope="session")
def spaces(models):
    return {name: build_physical_space(m) for name, m in models.items()}


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_hermitian(rng, d):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return (a + a.conj().T) / 2


# name -> (passed, detail, seconds, budget); filled by test_acceptance
ACCEPTANCE_RESULTS: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, (ok, detail, secs, budget) in sorted(ACCEPTANCE_RESULTS.items()):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail} [{secs:.2f} s / {budget:g} s]")
