"""Shared fixtures and the acceptance summary hook.

Catalog models are derived once per session; derivation is cheap but the
simulator tests reuse the same objects many times.
"""

import numpy as np
import pytest

from thermolb import resolve_catalog


@pytest.fixture(scope="session")
def q3():
    return resolve_catalog("q3")


@pytest.fixture(scope="session")
def q5():
    return resolve_catalog("q5")


@pytest.fixture(scope="session")
def q5_ghost():
    return resolve_catalog("q5-ghost")


@pytest.fixture(scope="session")
def q7():
    return resolve_catalog("q7")


@pytest.fixture(scope="session")
def q11():
    return resolve_catalog("q11")


@pytest.fixture(scope="session")
def q21():
    return resolve_catalog("q21")


@pytest.fixture(autouse=True)
def _no_stray_numpy_warnings():
    # macroscopic reductions guard their own divisions; anything else
    # surfacing as a warning in tests is a bug
    with np.errstate(all="warn"):
        yield


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Print one PASS/FAIL line per acceptance criterion at the end."""
    lines = {}
    for status in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(status, []):
            name = getattr(rep, "nodeid", "")
            if "test_acceptance.py::test_criterion_" in name:
                tag = name.split("::test_criterion_")[1]
                num = int(tag.split("_")[0])
                label = tag.split("_", 1)[1] if "_" in tag else ""
                verdict = "PASS" if status == "passed" else "FAIL"
                lines[num] = (verdict, label.replace("_", " "))
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(lines):
        verdict, label = lines[num]
        terminalreporter.write_line(f"criterion {num:2d} {verdict}  {label}")
