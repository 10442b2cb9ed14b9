import sys
from pathlib import Path

import numpy as np
import pytest

from jcmflow.series import ModelParams

sys.path.insert(0, str(Path(__file__).parent))

_ACCEPTANCE_LINES = []


@pytest.fixture
def params():
    return ModelParams(1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def acceptance_log():
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


class _Criterion:
    def __init__(self, log, label):
        self.log, self.label = log, label

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        status = "PASS" if exc_type is None else "FAIL"
        line = f"[{status}] {self.label}"
        if exc is not None:
            line += f": {str(exc).splitlines()[0] if str(exc) else exc_type.__name__}"
        self.log.append(line)
        print(line)
        return False


@pytest.fixture
def criterion(acceptance_log):
    """``with criterion("label"):`` records one pass/fail line for the summary."""
    return lambda label: _Criterion(acceptance_log, label)
