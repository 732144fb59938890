"""Collects the acceptance verdict lines and repeats them in the terminal summary."""

VERDICTS = []


def record(line: str):
    VERDICTS.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)
