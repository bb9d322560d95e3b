"""Session fixtures for the test suite, plus the acceptance-line reporter."""

from __future__ import annotations

import re
from pathlib import Path

import pytest

from chartpipe.evaluation import load_triplets
from chartpipe.tabular import load_csv_path

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def movies():
    return load_csv_path(FIXTURES / "movies_mini.csv")


@pytest.fixture(scope="session")
def cars():
    return load_csv_path(FIXTURES / "cars_mini.csv")


@pytest.fixture(scope="session")
def cities():
    return load_csv_path(FIXTURES / "cities.csv")


@pytest.fixture(scope="session")
def triplets():
    return load_triplets(FIXTURES / "triplets.jsonl")


# Acceptance tests are named test_criterion_NN_*; echo one machine-greppable
# verdict line per criterion, even under -q.
_CRITERION = re.compile(r"test_criterion_(\d+)")


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    match = _CRITERION.search(report.nodeid)
    if match is None:
        return
    verdict = "PASS" if report.passed else "FAIL"
    print(f"\nACCEPTANCE CRITERION {int(match.group(1))}: {verdict}", flush=True)
