import pytest

ACCEPTANCE = {}


@pytest.fixture
def record():
    """record(criterion, passed, detail) for the acceptance summary lines."""
    def _record(key, passed, detail=""):
        ACCEPTANCE[key] = (bool(passed), detail)
        print(f"[{'PASS' if passed else 'FAIL'}] {key}: {detail}")
        return passed
    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k.split()[1].rstrip(":"))):
        passed, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {key}: {detail}")
