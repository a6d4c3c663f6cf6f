import sys
from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import settings

from ldstack import Schedule

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

F = Fraction
PI_236 = {"a": F(1, 2), "b": F(1, 3), "c": F(1, 6)}
UNIFORM2 = {"a": F(1, 2), "b": F(1, 2)}


@pytest.fixture
def pi236():
    return Schedule.stationary(PI_236)


@pytest.fixture
def uniform2():
    return Schedule.stationary(UNIFORM2)


def uniform(n, prefix="u"):
    return {f"{prefix}{i}": F(1, n) for i in range(1, n + 1)}


@pytest.fixture
def adversary_table():
    """Three uniform steps on u1..u5, then uniform on u4, u5."""
    return Schedule.table([uniform(5)] * 3 + [{"u4": F(1, 2), "u5": F(1, 2)}], tail="halt")


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
