import numpy as np
import pytest

from ecco.core import ObjectiveProblem


def scalar_problem(f, g, h=None, name="scalar"):
    return ObjectiveProblem(
        name=name,
        dim=1,
        value=lambda x: float(f(np.asarray(x)[0])),
        gradient=lambda x: np.array([g(np.asarray(x)[0])]),
        hessian=None if h is None else (lambda x: np.array([[h(np.asarray(x)[0])]])),
    )


@pytest.fixture
def half_square():
    """f(x) = x^2 / 2."""
    return scalar_problem(lambda x: 0.5 * x * x, lambda x: x, lambda x: 1.0, "half_square")


@pytest.fixture
def square():
    """f(x) = x^2."""
    return scalar_problem(lambda x: x * x, lambda x: 2 * x, lambda x: 2.0, "square")


# One line per acceptance criterion, filled by test_acceptance.py.
ACCEPTANCE_REPORT: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_REPORT:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_REPORT, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
