import json
from pathlib import Path

import numpy as np
import pytest

from bcb12.partition import SetPartition

FIXTURES = Path(__file__).parent / "fixtures"


def load_worked_example() -> dict:
    with open(FIXTURES / "worked_example.json", encoding="utf-8") as fh:
        return json.load(fh)


@pytest.fixture(scope="session")
def worked() -> dict:
    return load_worked_example()


@pytest.fixture(scope="session")
def pi(worked) -> SetPartition:
    return SetPartition.from_blocks(worked["blocks"])


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20120)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
