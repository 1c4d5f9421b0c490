"""Shared fixtures plus a per-criterion pass/fail summary at the end of the run."""
from __future__ import annotations

import pytest

from cascadex.graph import build_multigraph, project_simple
from cascadex.ingest import ActionEvent, EventLog, TrollRegistry

URL = "http://x.example/page"

_criteria: dict[int, str] = {}
_outcomes: dict[int, list[bool]] = {}
_by_node: dict[str, int] = {}


def pytest_collection_modifyitems(session, config, items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m is not None:
            num, title = m.args
            _criteria[num] = title
            _by_node[item.nodeid] = num


def pytest_runtest_logreport(report):
    num = _by_node.get(report.nodeid)
    if num is None:
        return
    if report.when == "call" or report.outcome != "passed":
        _outcomes.setdefault(num, []).append(report.outcome == "passed")


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_criteria):
        results = _outcomes.get(num, [])
        status = "PASS" if results and all(results) else ("NOT RUN" if not results else "FAIL")
        terminalreporter.write_line(f"criterion {num:>2} {status:<7} {_criteria[num]}")


def worked_events() -> list[ActionEvent]:
    """Four users: B->A @1, C->B @2, D->C @3 then shares D@4 A@5 B@6 C@7."""
    return [
        ActionEvent("e1", "B", 1, reply_to="A"),
        ActionEvent("e2", "C", 2, mentions=("B",)),
        ActionEvent("e3", "D", 3, reply_to="C"),
        ActionEvent("s1", "D", 4, urls=(URL,)),
        ActionEvent("s2", "A", 5, urls=(URL,)),
        ActionEvent("s3", "B", 6, urls=(URL,)),
        ActionEvent("s4", "C", 7, urls=(URL,)),
    ]


@pytest.fixture
def worked():
    log = EventLog.from_events(worked_events())
    registry = TrollRegistry(frozenset({"A"}))
    multi = build_multigraph(log, registry)
    return log, registry, multi, project_simple(multi)
