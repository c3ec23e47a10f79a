from __future__ import annotations

import re
from pathlib import Path

import pytest

GOLDEN = Path(__file__).parent / "golden"
_TUPLE = re.compile(r"\((?:[^()]|\([^()]*\))*\)")


def squash(text: str | None) -> str | None:
    return None if text is None else re.sub(r"\s+", "", text)


def read_golden_rows(name: str) -> list[tuple]:
    """(state, tape, head, executed, new) per row, with blanks trimmed off the tape."""
    rows = []
    for line in (GOLDEN / name).read_text().splitlines():
        toks = line.split()
        tuples = [squash(t) for t in _TUPLE.findall(line)]
        tape = (toks[1] + " " + toks[2]).strip("#")
        rows.append((toks[0], tape, int(toks[3]), tuples[0], tuples[1] if len(tuples) > 1 else None))
    return rows


def trace_rows(records) -> list[tuple]:
    return [(r.state_label, r.tape.strip("#"), r.head, squash(r.executed), squash(r.new)) for r in records]


def golden_bits(rows) -> list[int]:
    return [int(b) for row in rows for b in re.findall(r"(\d)_qr", row[3])]


def read_listing(name: str) -> list[str]:
    return [line.strip() for line in (GOLDEN / name).read_text().splitlines() if line.strip()]


@pytest.fixture
def golden():
    return read_golden_rows


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
