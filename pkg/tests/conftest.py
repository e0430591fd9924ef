import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from diwe.core import LabeledInstance  # noqa: E402


def make_instances(X, y, start=1):
    return [LabeledInstance(np.asarray(x, dtype=float), int(lab), start + i) for i, (x, lab) in enumerate(zip(X, y))]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_criteria: list[tuple[str, str, str]] = []


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance.py::test_criterion_" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    detail = dict(report.user_properties).get("detail", "")
    _criteria.append((name, "PASS" if report.passed else "FAIL", detail))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for name, status, detail in sorted(_criteria):
        num = int(name.split("_")[2])
        terminalreporter.write_line(f"criterion {num:2d}: {status}  {detail}")
