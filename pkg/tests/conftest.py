import numpy as np
import pytest

from niwrs.belief import new_belief


def random_pd(rng, K, jitter=0.5):
    G = rng.standard_normal((K, K))
    return G @ G.T + jitter * np.eye(K)


def random_belief(rng, K=3, b_margin=(2.0, 10.0)):
    return new_belief(rng.normal(0, 1, K), random_pd(rng, K), q=rng.uniform(0.5, 5.0),
                      b=K + 1 + rng.uniform(*b_margin))


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


@pytest.fixture
def unit_state():
    """K=2, q=1, b=5, theta=0, B=I: the hand-worked example state."""
    return new_belief([0.0, 0.0], np.eye(2), q=1.0, b=5.0)


ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def record_criterion():
    def record(number: int, passed: bool, detail: str) -> None:
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES[number] = line
        print(line)
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
