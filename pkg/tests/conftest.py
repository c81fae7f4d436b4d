import numpy as np
import pytest

from rankalign.cohort import Cohort
from rankalign.optim import SolverConfig, fit_l1_linear
from rankalign.synthgen import GeneratorConfig, generate

_acceptance_lines = []


@pytest.fixture(scope="session")
def acceptance_record():
    """Collect one pass/fail line per acceptance criterion.

    Lines print immediately (visible on failure) and again in the terminal
    summary, because captured stdout of passing tests is hidden.
    """

    def record(tag, ok, detail):
        line = f"[{tag}] {detail}: {'PASS' if ok else 'FAIL'}"
        _acceptance_lines.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _acceptance_lines:
        terminalreporter.write_sep("-", "acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def jit_warm():
    # first solver call pays the numba compile; keep it out of timed tests
    X = np.array([[1.0], [-1.0]])
    for loss in ("squared_hinge", "squared", "epsilon_insensitive"):
        fit_l1_linear(X, np.array([1.0, -1.0]),
                      SolverConfig(c=1.0, loss=loss, fit_intercept=True))
    return True


@pytest.fixture
def make_cohort():
    def build(features, rating, label=None, ids=None, names=None):
        features = np.asarray(features, float)
        n, m = features.shape
        ids = ids if ids is not None else [f"p{i}" for i in range(n)]
        names = names if names is not None else [f"x{j}" for j in range(m)]
        lab = None if label is None else np.asarray(label, int)
        return Cohort(ids, features, names, np.asarray(rating, float), lab)

    return build


@pytest.fixture(scope="session")
def canonical_synth():
    return generate(GeneratorConfig(seed=1))


@pytest.fixture(scope="session")
def small_synth():
    # compact cohort for harness/CLI tests where runtime matters more
    # than statistical power
    return generate(GeneratorConfig(
        n=100, m=8, k_informative=3, correlated_extras=1, seed=5,
    ))
