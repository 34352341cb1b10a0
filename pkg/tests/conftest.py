import pytest

_RESULTS: list[tuple[str, bool, str]] = []


class AcceptanceLog:
    """Records one PASS/FAIL line per criterion; printed at the end of the run."""

    def check(self, label: str, passed: bool, detail: str = "") -> bool:
        passed = bool(passed)
        line = f"{'PASS' if passed else 'FAIL'}  {label}  {detail}".rstrip()
        print(line)
        _RESULTS.append((label, passed, detail))
        return passed


@pytest.fixture(scope="session")
def acceptance():
    return AcceptanceLog()


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for label, passed, detail in _RESULTS:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {label}  {detail}".rstrip())
