import numpy as np
import pytest

# Filled by test_acceptance.py; printed once at the end of the session.
# Maps criterion name -> list of outcomes of its (possibly parametrized) cases.
ACCEPTANCE_RESULTS = {}


def pytest_runtest_logreport(report):
    marker = "test_acceptance.py::test_criterion_"
    if marker not in report.nodeid:
        return
    if report.when == "call" or report.failed:
        key = report.nodeid.split(marker, 1)[1].split("[", 1)[0]
        ACCEPTANCE_RESULTS.setdefault(key, []).append(report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS, key=lambda k: int(k.split("_", 1)[0])):
        outcomes = ACCEPTANCE_RESULTS[key]
        number, name = key.split("_", 1)
        status = "PASS" if all(o == "passed" for o in outcomes) else "FAIL"
        cases = f" ({len(outcomes)} cases)" if len(outcomes) > 1 else ""
        terminalreporter.write_line(f"[{status}] criterion {number}: {name}{cases}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
