import json
from importlib import resources

import numpy as np
import pytest

from czkit.afd import augment
from czkit.estimator import DescriptorEstimator
from czkit.reduction import ReductionLimits
from czkit.scenario import load_scenario
from czkit.setops import ConstrainedZonotope

DATA = resources.files("czkit") / "data"


def data_path(name):
    return str(DATA / name)


def random_cz(rng, n, n_g, n_c, scale=1.0):
    """Random nonempty constrained zonotope: the constraints pass through an interior factor."""
    G = rng.normal(size=(n, n_g)) * scale
    c = rng.normal(size=n)
    if n_c == 0:
        return ConstrainedZonotope(G, c)
    A = rng.normal(size=(n_c, n_g))
    xi0 = rng.uniform(-0.6, 0.6, size=n_g)
    return ConstrainedZonotope(G, c, A, A @ xi0)


@pytest.fixture(scope="session")
def estimation_scenario():
    return load_scenario(data_path("example_estimation.spec"))


@pytest.fixture(scope="session")
def afd_scenario():
    return load_scenario(data_path("example_afd.spec"))


@pytest.fixture(scope="session")
def example_model(estimation_scenario):
    return estimation_scenario.model


@pytest.fixture(scope="session")
def example_bounds(estimation_scenario):
    return estimation_scenario.bounds


@pytest.fixture(scope="session")
def example_estimator(estimation_scenario):
    return DescriptorEstimator(estimation_scenario.model, estimation_scenario.bounds, ReductionLimits(15, 5))


@pytest.fixture(scope="session")
def bank(afd_scenario):
    return afd_scenario.bank()


@pytest.fixture(scope="session")
def aug(bank):
    return augment(bank)


@pytest.fixture(scope="session")
def published_input():
    return np.array(json.loads((DATA / "published_input.json").read_text()))


def random_bank(rng, n, n_models=2, n_u=1, n_w=1, n_y=1):
    """Small random bank; some models are descriptor systems with one static row."""
    from czkit.afd import ModelBank
    from czkit.estimator import DescriptorModel
    from czkit.setops import IntervalBox

    def model():
        E = np.eye(n)
        if n > 1 and rng.random() < 0.5:
            E[-1, -1] = 0.0
        A = rng.normal(size=(n, n)) * 0.6
        if E[-1, -1] == 0.0:
            A[-1, -1] = 1.0 + rng.random()
        return DescriptorModel(
            E,
            A,
            rng.normal(size=(n, n_u)),
            rng.normal(size=(n, n_w)) * 0.3,
            rng.normal(size=(n_y, n)),
            rng.normal(size=(n_y, n_u)) * 0.3,
            np.eye(n_y) * 0.2,
        )

    return ModelBank(
        [model() for _ in range(n_models)],
        ConstrainedZonotope(np.eye(n) * 0.5, np.zeros(n)),
        ConstrainedZonotope(np.eye(n_w) * 0.2, np.zeros(n_w)),
        ConstrainedZonotope(np.eye(n_y), np.zeros(n_y)),
        ConstrainedZonotope(50 * np.eye(n), np.zeros(n)),
        IntervalBox(-np.ones(n_u), np.ones(n_u)),
    )


ACCEPTANCE_LINES = []


def record_acceptance(number, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
