import pytest

from conjcount.counting import clear_cache
from conjcount.forms import QForm, build_frame

FORMS = {"d12": (1, 0, -3), "d8": (1, 0, -2), "d5": (1, 1, -1)}


@pytest.fixture(scope="session")
def frames():
    return {k: build_frame(QForm(*v)) for k, v in FORMS.items()}


@pytest.fixture(scope="session")
def frame12(frames):
    return frames["d12"]


@pytest.fixture
def fresh_cache():
    clear_cache()
    yield
    clear_cache()


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
