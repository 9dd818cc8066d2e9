import json
import sys
from pathlib import Path

import mpmath
import pytest

from sectionhyp import extremal
from sectionhyp.precision import PrecisionContext

# comparisons in the tests run at the default context precision
mpmath.mp.prec = 256

ORACLE = json.loads(Path(__file__).with_name("frozen_oracle.json").read_text())


@pytest.fixture(scope="session")
def oracle():
    return ORACLE


@pytest.fixture(scope="session")
def ctx256():
    return PrecisionContext(bits=256)


@pytest.fixture(scope="session")
def canonical40(ctx256):
    return extremal.build_sequence(40, ctx256)


def mpf(text):
    return mpmath.mpf(text)


def pytest_terminal_summary(terminalreporter):
    for name, module in list(sys.modules.items()):
        if name.endswith("test_acceptance") and getattr(module, "RESULTS", None):
            terminalreporter.section("acceptance criteria")
            for line in sorted(module.RESULTS):
                terminalreporter.write_line(line)
