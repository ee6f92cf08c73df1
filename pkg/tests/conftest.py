import numpy as np
import pytest

from ai_toolkit.presets import PRESETS


@pytest.fixture(params=sorted(PRESETS))
def preset(request):
    return PRESETS[request.param]


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def random_word(rng, n):
    return rng.choice(np.array([-1, 1], dtype=np.int8), size=n)


CRITERIA = {}


@pytest.fixture
def report(request):
    """Record one PASS/FAIL line for an acceptance criterion."""

    def _report(number, ok, detail):
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        CRITERIA[number] = line
        print(line)
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(CRITERIA):
        terminalreporter.write_line(CRITERIA[k])
