from __future__ import annotations

import json
from pathlib import Path

import pytest

from compact.ledger import HistoryDoc
from compact.norms import build_tables
from compact.parser import load_compact

FIXTURES = Path(__file__).parent / "fixtures"

_acceptance: dict[int, tuple[str, str]] = {}


@pytest.fixture(scope="session")
def fixtures() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def spec():
    return load_compact(FIXTURES / "privacy_compact.hrc")


@pytest.fixture(scope="session")
def tables(spec):
    return build_tables(spec)


@pytest.fixture(scope="session")
def reference_doc() -> HistoryDoc:
    return HistoryDoc.from_json(json.loads((FIXTURES / "reference_history.json").read_text()))


@pytest.fixture(scope="session")
def reference_states() -> dict:
    data = json.loads((FIXTURES / "reference_history_states.json").read_text())
    data.pop("_derivation")
    return data


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    number, title = marker.args
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        status = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[rep.outcome]
        _acceptance[number] = (title, status)


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_acceptance):
        title, status = _acceptance[number]
        terminalreporter.write_line(f"[{status}] {number}. {title}")
