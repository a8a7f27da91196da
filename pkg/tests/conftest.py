"""Shared test plumbing.

The acceptance tests register their verdicts here so the run prints one
line per criterion in the terminal summary, independent of pytest's own
PASSED/FAILED rows.
"""

_CRITERIA = []


def register_criterion(number: int, name: str, passed: bool, detail: str = "") -> None:
    _CRITERIA.append((number, name, bool(passed), detail))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number, name, passed, detail in sorted(_CRITERIA):
        status = "PASS" if passed else "FAIL"
        line = f"criterion {number} [{status}] {name}"
        if detail:
            line += f": {detail}"
        terminalreporter.write_line(line)
