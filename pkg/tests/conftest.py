import re

import pytest

from affinedp import ModelSpec


@pytest.fixture
def two_control():
    """One state; control a: J -> 1 + 0.5 J, control b: J -> 0.3 + 0.8 J."""
    return ModelSpec(1, [["a", "b"]], [[[0.5], [0.8]]], [[1.0, 0.3]], [0.0])


@pytest.fixture
def scalar_half():
    return ModelSpec(1, [["only"]], [[[0.5]]], [[1.0]], [0.0])


def pytest_terminal_summary(terminalreporter):
    """One pass/fail line per acceptance criterion."""
    lines = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            m = re.search(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)", getattr(rep, "nodeid", ""))
            if m and rep.when == "call" or (m and outcome == "error"):
                lines.append((int(m.group(1)), m.group(2), "PASS" if outcome == "passed" else "FAIL"))
    if lines:
        terminalreporter.section("acceptance criteria")
        for num, name, verdict in sorted(set(lines)):
            terminalreporter.write_line(f"criterion {num} ({name.replace('_', ' ')}): {verdict}")
