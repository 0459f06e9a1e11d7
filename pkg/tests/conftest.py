"""Shared fixtures, hypothesis configuration, and the acceptance summary."""

from __future__ import annotations

import re

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

# ---------------------------------------------------------------------------
# acceptance summary: one verdict line per numbered criterion
# ---------------------------------------------------------------------------

_CRITERION = re.compile(r"test_acceptance\.py.*test_criterion_(\d+)")
_acceptance_outcomes: dict[int, dict[str, int]] = {}


def pytest_runtest_logreport(report):
    match = _CRITERION.search(report.nodeid)
    if not match:
        return
    tally = _acceptance_outcomes.setdefault(
        int(match.group(1)),
        {"passed": 0, "failed": 0, "xfailed": 0, "skipped": 0},
    )
    if report.when == "call":
        if hasattr(report, "wasxfail"):
            # an expected failure that passes anyway is a real failure
            tally["xfailed" if report.skipped else "failed"] += 1
        elif report.failed:
            tally["failed"] += 1
        elif report.skipped:
            tally["skipped"] += 1
        else:
            tally["passed"] += 1
    elif report.failed:  # setup or teardown error
        tally["failed"] += 1


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_outcomes:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for criterion in range(1, 8):
        tally = _acceptance_outcomes.get(criterion)
        if tally is None:
            verdict = "NOT RUN"
        elif tally["failed"]:
            verdict = "FAIL"
        else:
            notes = []
            if tally["xfailed"]:
                notes.append(
                    f"{tally['xfailed']} sub-check(s) expected-fail on a "
                    "documented inconsistency"
                )
            if tally["skipped"]:
                notes.append(
                    f"{tally['skipped']} sub-check(s) skipped on this hardware"
                )
            verdict = "PASS" + (f" ({'; '.join(notes)})" if notes else "")
        terminalreporter.write_line(f"criterion {criterion}: {verdict}")


@pytest.fixture(scope="session")
def golden():
    """The full reference dataset (10 planted paths, 5000 noise records)."""
    from hopscan.synth import golden_table1

    return golden_table1()


@pytest.fixture(scope="session")
def golden_small():
    """Reduced-noise variant that fits under the exhaustive-search guard."""
    from hopscan.synth import golden_table1

    return golden_table1(1500)


@pytest.fixture(scope="session")
def golden_detected(golden):
    """Paths actually detected on the full golden dataset (library route)."""
    from hopscan.ingest import build_index, canonicalize, filter_atomic_swaps
    from hopscan.pathfinder import find_paths

    records = canonicalize(filter_atomic_swaps(golden.records), golden.token_map)
    index = build_index(records)
    return find_paths(index, golden.config)
