"""Shared pytest plumbing: collects acceptance verdict lines and prints them
as a dedicated section in the terminal summary, one line per criterion."""

acceptance_verdicts = []


def pytest_runtest_logreport(report):
    if report.when == "call" and report.failed and "test_acceptance" in report.nodeid:
        name = report.nodeid.split("::")[-1]
        acceptance_verdicts.append(f"[acceptance] {name}: FAIL")


def pytest_terminal_summary(terminalreporter):
    if acceptance_verdicts:
        terminalreporter.section("acceptance criteria")
        for line in sorted(acceptance_verdicts):
            terminalreporter.write_line(line)
