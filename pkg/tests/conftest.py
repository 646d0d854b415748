"""Shared test plumbing: the acceptance criteria reporter.

Each acceptance test records its verdict through the `criterion`
fixture; a terminal-summary hook then prints one PASS/FAIL line per
criterion so the full run always ends with a readable scorecard, even
when output capturing swallows the in-test prints.
"""

import pytest

_ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


def record_criterion(num: int, desc: str, ok: bool, detail: str = "") -> bool:
    _ACCEPTANCE[num] = (desc, ok, detail)
    print(_format_line(num))
    return ok


def _format_line(num: int) -> str:
    desc, ok, detail = _ACCEPTANCE[num]
    status = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    return f"[acceptance {num}] {status}: {desc}{suffix}"


@pytest.fixture
def criterion():
    return record_criterion


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_ACCEPTANCE):
        terminalreporter.write_line(_format_line(num))
