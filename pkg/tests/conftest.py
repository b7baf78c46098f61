import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE: dict[int, str] = {}


def record(k: int, passed: bool, detail: str) -> None:
    """Store and print the one-line verdict for acceptance criterion ``k``."""
    line = f"criterion {k:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE[k] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
