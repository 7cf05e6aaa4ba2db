import pytest

from hypercbo import _accel

ACCEPTANCE_LINES = []


@pytest.fixture(params=["numba", "numpy"])
def backend(request):
    """Run a test under both kernel backends."""
    prev = _accel.set_backend(request.param)
    yield request.param
    _accel.set_backend(prev)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
