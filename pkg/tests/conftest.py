import os

import numpy as np
import pytest


def pytest_collection_modifyitems(config, items):
    if os.environ.get("STEERLAB_SLOW"):
        return
    skip = pytest.mark.skip(reason="long run; set STEERLAB_SLOW=1")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES, key=lambda s: (int(s.split()[1].rstrip(".").split("/")[0].rstrip("abc")), s)):
        terminalreporter.write_line(line)
