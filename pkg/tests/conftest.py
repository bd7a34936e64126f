"""Shared test plumbing: collects acceptance verdicts for the end-of-run summary."""

ACCEPTANCE_RESULTS: list = []


def record_acceptance(ok: bool, label: str) -> None:
    ACCEPTANCE_RESULTS.append(f"[{'PASS' if ok else 'FAIL'}] {label}")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance scorecard")
        for line in ACCEPTANCE_RESULTS:
            terminalreporter.write_line(line)
