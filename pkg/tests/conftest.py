from __future__ import annotations

from pathlib import Path

import pytest

from detneg.fixtures import ALL

ROOT = Path(__file__).resolve().parents[1]
CORPUS = ROOT / "corpus"

# criterion number -> (title, outcome); filled in by test_acceptance
ACCEPTANCE: dict[int, tuple[str, str]] = {}


@pytest.fixture(params=sorted(ALL))
def fixture_name(request):
    return request.param


@pytest.fixture
def corpus_dir() -> Path:
    return CORPUS


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    m = item.get_closest_marker("criterion")
    if m is None:
        return
    number, title = m.args
    if report.when == "call" or report.failed:
        ACCEPTANCE[number] = (title, "PASS" if report.passed else "FAIL")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, outcome = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d} {outcome}: {title}")
