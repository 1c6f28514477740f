import pytest

_LINES_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_LINES_KEY] = []


@pytest.fixture
def report_criterion(request):
    """Record one acceptance line: report_criterion(number, status, detail)."""
    lines = request.config.stash[_LINES_KEY]

    def report(number, status, detail=""):
        line = f"criterion {number:>2}: {status} {detail}".rstrip()
        lines.append((number, line))
        print(line)

    return report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_LINES_KEY, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(lines, key=lambda item: item[0]):
        terminalreporter.write_line(line)
