"""Collects one verdict line per acceptance criterion and prints them at the end."""

import re

import pytest

_VERDICTS: list[str] = []


@pytest.fixture
def verdict():
    def record(criterion: str, passed: bool, detail: str = "") -> bool:
        line = f"criterion {criterion}: {'PASS' if passed else 'FAIL'}  {detail}".rstrip()
        _VERDICTS.append(line)
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        def order(line):
            tag = line.split()[1].rstrip(":")
            return int(re.match(r"\d+", tag).group()), tag
        for line in sorted(_VERDICTS, key=order):
            terminalreporter.write_line(line)
