import pytest

from nlqual import instances

CRITERIA: dict = {}


def record(num: int, ok: bool, detail: str = "") -> None:
    """Record and print one acceptance line; the caller still asserts."""
    line = f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {detail}".rstrip()
    CRITERIA[num] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(CRITERIA):
        terminalreporter.write_line(CRITERIA[k])


@pytest.fixture(scope="session")
def ex():
    return {name: instances.example(name) for name in instances.EXAMPLES}
