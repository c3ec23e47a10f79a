"""Tape, configuration and rendering primitives."""

from __future__ import annotations

from collections.abc import Iterable, Iterator
from dataclasses import dataclass

from .errors import MalformedLiteral, UnknownSymbol

BLANK = "#"
BASE_ALPHABET = ("0", "1", BLANK)
MOVES = (-1, 0, 1)


class Tape:
    """Sparse tape: only non-blank squares are stored."""

    __slots__ = ("_cells",)

    def __init__(self, cells: dict[int, str] | None = None):
        self._cells: dict[int, str] = {}
        if cells:
            for i, s in cells.items():
                self.write(i, s)

    def read(self, i: int) -> str:
        return self._cells.get(i, BLANK)

    def write(self, i: int, symbol: str) -> Tape:
        if symbol == BLANK:
            self._cells.pop(i, None)
        else:
            self._cells[i] = symbol
        return self

    __getitem__ = read

    def __setitem__(self, i: int, symbol: str) -> None:
        self.write(i, symbol)

    def support(self) -> list[int]:
        return sorted(self._cells)

    def __len__(self) -> int:
        return len(self._cells)

    def items(self) -> Iterator[tuple[int, str]]:
        return iter(sorted(self._cells.items()))

    def bounds(self) -> tuple[int, int] | None:
        if not self._cells:
            return None
        return min(self._cells), max(self._cells)

    def copy(self) -> Tape:
        t = Tape()
        t._cells = dict(self._cells)
        return t

    def snapshot(self) -> frozenset[tuple[int, str]]:
        return frozenset(self._cells.items())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Tape):
            return NotImplemented
        return self._cells == other._cells

    def __repr__(self) -> str:
        return f"Tape({dict(self.items())!r})"


def tape_read(tape: Tape, i: int) -> str:
    return tape.read(i)


def tape_write(tape: Tape, i: int, symbol: str) -> Tape:
    return tape.write(i, symbol)


@dataclass(frozen=True)
class Configuration:
    """Hashable snapshot of (state, head, tape)."""

    state: int
    head: int
    cells: frozenset[tuple[int, str]]

    @classmethod
    def capture(cls, state: int, head: int, tape: Tape) -> Configuration:
        return cls(state, head, tape.snapshot())

    def tape(self) -> Tape:
        return Tape(dict(self.cells))


def tape_from_literal(text: str, alphabet: Iterable[str] | None = None) -> tuple[Tape, int]:
    """Parse a literal such as ``# #11111#``; the glyph after the space is square 0."""
    if text.count(" ") != 1:
        raise MalformedLiteral(f"tape literal must contain exactly one space: {text!r}")
    left, right = text.split(" ")
    if not right:
        raise MalformedLiteral(f"no scanned square after the space: {text!r}")
    allowed = set(alphabet) if alphabet is not None else None
    tape = Tape()
    for offset, glyph in enumerate(reversed(left), start=1):
        _check_glyph(glyph, allowed)
        tape.write(-offset, glyph)
    for i, glyph in enumerate(right):
        _check_glyph(glyph, allowed)
        tape.write(i, glyph)
    return tape, 0


def _check_glyph(glyph: str, allowed: set[str] | None) -> None:
    if allowed is not None and glyph not in allowed:
        raise UnknownSymbol(f"symbol {glyph!r} is not in the alphabet")


def render_window(tape: Tape, head: int, pad: int = 2) -> str:
    """Render the tape with a space immediately before the scanned square."""
    if pad < 1:
        raise ValueError("pad must be at least 1")
    lo = hi = head
    b = tape.bounds()
    if b is not None:
        lo, hi = min(lo, b[0]), max(hi, b[1])
    parts = []
    for i in range(lo - pad, hi + pad + 1):
        if i == head:
            parts.append(" ")
        parts.append(tape.read(i))
    return "".join(parts)


def normalize_row(rendered: str) -> str:
    """Strip the blank margins so rows rendered with different widths compare equal."""
    return rendered.strip(BLANK)
