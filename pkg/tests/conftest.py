import numpy as np
import pytest

from saddle_scope.objective import QuadraticSpec, make_example0, make_example1, make_example2, make_quadratic


@pytest.fixture(scope="session")
def ex0():
    return make_example0()


@pytest.fixture(scope="session")
def ex1():
    return make_example1()


@pytest.fixture(scope="session")
def ex2():
    return make_example2(4.0, 1.0)


@pytest.fixture(scope="session")
def quad13():
    return make_quadratic(QuadraticSpec(np.diag([1.0, 3.0]), np.zeros(2)))


@pytest.fixture(scope="session")
def all_objectives(ex0, ex1, ex2):
    quad = make_quadratic(QuadraticSpec(np.array([[2.0, 0.5], [0.5, 1.0]]), np.array([1.0, -1.0])))
    return [ex0, ex1, ex2, quad]


ACCEPTANCE_RESULTS = {}


def record_criterion(number, title, passed, detail=""):
    ACCEPTANCE_RESULTS[number] = (title, passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        title, passed, detail = ACCEPTANCE_RESULTS[number]
        line = f"criterion {number:2d} {'PASS' if passed else 'FAIL'}  {title}"
        terminalreporter.write_line(f"{line}  [{detail}]" if detail else line)
