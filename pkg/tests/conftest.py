import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from kilograms.synth import FIXTURE_TABLE_SIZE, fixture_corpus, write_corpus

settings.register_profile("default", deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def fixture_dir(tmp_path_factory):
    """The ~1 MB planted reference corpus written as one file per document."""
    d = tmp_path_factory.mktemp("fixture")
    pc = fixture_corpus()
    write_corpus(pc.corpus.documents(), d)
    return d


@pytest.fixture(scope="session")
def fixture_table_size():
    return FIXTURE_TABLE_SIZE


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_CRITERIA: list[tuple[str, str]] = []


def pytest_runtest_logreport(report):
    if report.when == "call":
        for key, value in report.user_properties:
            if key == "criterion":
                _CRITERIA.append((report.nodeid, value))


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.write_sep("=", "acceptance criteria")
        for _, line in sorted(_CRITERIA, key=lambda t: t[1]):
            terminalreporter.write_line(line)


@pytest.fixture
def criterion(record_property):
    """``criterion(cid, ok, detail)`` records one pass/fail line, then asserts."""
    def report(cid: str, ok: bool, detail: str) -> None:
        line = f"{cid} {'PASS' if ok else 'FAIL'}  {detail}"
        print(line)
        record_property("criterion", line)
        assert ok, line
    return report
