import pytest

_ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = []


@pytest.fixture
def verdict(request):
    """Record one pass/fail line for an acceptance criterion and return the flag."""
    lines = request.config.stash[_ACCEPTANCE]

    def record(criterion, passed, detail):
        line = f"criterion {criterion}: {'PASS' if passed else 'FAIL'} | {detail}"
        lines.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash[_ACCEPTANCE]
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
