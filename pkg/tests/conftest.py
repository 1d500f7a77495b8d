import os
import sys

sys.path.insert(0, os.path.dirname(__file__))

ACCEPTANCE = []


def record_acceptance(number, passed, detail, informational=False):
    """Store one acceptance line; printed in the terminal summary."""
    tag = "INFO" if informational else ("PASS" if passed else "FAIL")
    line = f"[{tag}] criterion {number}: {detail}"
    ACCEPTANCE.append(line)
    print(line)
    return passed


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: end-to-end acceptance criteria")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
