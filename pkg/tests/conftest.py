"""Shared pytest hooks: a one-line-per-criterion summary for the acceptance gate."""

ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        status, seconds, note = ACCEPTANCE[num]
        terminalreporter.write_line(f"C{num:<3} {status:<4} {seconds:8.2f}s  {note}")
