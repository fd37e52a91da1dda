import pytest

from radialblowup import _kernels

_VERDICTS: list[tuple[str, bool, str]] = []


@pytest.fixture(scope="session", autouse=True)
def _compile_kernel():
    _kernels.warm_up()


@pytest.fixture
def verdict():
    """Record one acceptance line: ``verdict(name, passed, detail)``."""

    def record(name: str, passed: bool, detail: str = "") -> bool:
        _VERDICTS.append((name, bool(passed), detail))
        print(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}")
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _VERDICTS:
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
