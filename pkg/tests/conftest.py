import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from wgraph import synthetic  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def two():
    return synthetic.two_vertex()


@pytest.fixture
def path3():
    return synthetic.path_graph(3)


@pytest.fixture
def k23():
    return synthetic.complete_bipartite(2, 3)


def pytest_terminal_summary(terminalreporter):
    import acceptance_report

    lines = acceptance_report.summary_lines()
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
