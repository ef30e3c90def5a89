"""Shared test fixtures; collects acceptance verdicts for an end-of-run summary."""

import pytest

_CRITERIA = {}


@pytest.fixture
def record_criterion():
    """Record one acceptance criterion verdict; returns the pass flag."""

    def _record(num, name, ok, detail=""):
        _CRITERIA[num] = (name, bool(ok), detail)
        return bool(ok)

    return _record


def pytest_sessionfinish(session, exitstatus):
    if not _CRITERIA:
        return
    width = 78
    print()
    print(" acceptance criteria ".center(width, "="))
    for num in sorted(_CRITERIA):
        name, ok, detail = _CRITERIA[num]
        status = "PASS" if ok else "FAIL"
        suffix = f"  ({detail})" if detail else ""
        print(f"[{status}] {num}. {name}{suffix}")
    print("=" * width)
