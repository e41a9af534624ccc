import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from qdst.dst import Frame, MassFunction  # noqa: E402

# Three sources over the frame {A, B}, masses listed as [empty, A, B, AB].
REFERENCE_INPUTS = {
    "m1": [0.1, 0.2, 0.5, 0.2],
    "m2": [0.05, 0.45, 0.25, 0.25],
    "m3": [0.3, 0.1, 0.1, 0.5],
}

# Combined masses for four rules over those sources, to three or four decimals.
REFERENCE_COMBINED = {
    "m1 & m2 & m3": [0.647, 0.143, 0.185, 0.025],
    "m1 | m2 | m3": [0.0015, 0.0585, 0.0705, 0.8695],
    "m1 ^ m2": [0.27, 0.23, 0.19, 0.31],
    "(~(m1 & m2)) & (m2 | m3)": [0.207, 0.343, 0.193, 0.257],
}


@pytest.fixture
def ab_frame():
    return Frame(["A", "B"])


@pytest.fixture
def three_sources(ab_frame):
    return {k: MassFunction(ab_frame, v) for k, v in REFERENCE_INPUTS.items()}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# -- one summary line per acceptance criterion ---------------------------------

_criteria: dict[str, list[str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label): acceptance criterion this test checks")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _criteria.setdefault(marker.args[0], []).append(report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_criteria, key=lambda s: (len(s.split()[0]), s)):
        outcomes = _criteria[label]
        verdict = "PASS" if all(o == "passed" for o in outcomes) else "FAIL"
        terminalreporter.write_line(f"{verdict}  {label}  ({len(outcomes)} checks)")
