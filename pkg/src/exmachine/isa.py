"""Instruction forms, symbolic state references and program updates.

A state reference is either a plain ``int`` or a :class:`QRel`, which stands
for ``|Q| - c`` and is resolved against the state count at dispatch time.
"""

from __future__ import annotations

from collections import Counter
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field, replace
from typing import Union

from .core import BASE_ALPHABET, BLANK, MOVES
from .errors import AmbiguousDispatch, InstantiationRangeError, ParseError, UniquenessViolation


@dataclass(frozen=True, order=True)
class QRel:
    """``|Q| - c``; ``QRel(0)`` is bare ``|Q|``."""

    c: int

    def __post_init__(self) -> None:
        if self.c < 0:
            raise ValueError("QRel offset must be non-negative")

    def __str__(self) -> str:
        return "|Q|" if self.c == 0 else f"|Q|-{self.c}"


StateRef = Union[int, QRel]


@dataclass(frozen=True)
class Standard:
    q: StateRef
    a: str
    r: StateRef
    alpha: str
    move: int

    @property
    def key(self) -> tuple[StateRef, str]:
        return (self.q, self.a)


@dataclass(frozen=True)
class Random:
    q: StateRef
    a: str
    r: StateRef
    move: int

    @property
    def key(self) -> tuple[StateRef, str]:
        return (self.q, self.a)


@dataclass(frozen=True)
class Meta:
    q: StateRef
    a: str
    r: StateRef
    alpha: str
    move: int
    j: Standard | Random

    def __post_init__(self) -> None:
        if isinstance(self.j, Meta):
            raise ValueError("a meta instruction cannot nest another meta instruction")

    @property
    def key(self) -> tuple[StateRef, str]:
        return (self.q, self.a)


Instruction = Union[Standard, Random, Meta]


def is_symbolic(ref: StateRef) -> bool:
    return isinstance(ref, QRel)


def is_simple_meta(inst: Instruction) -> bool:
    """A non-meta instruction whose own states mention ``|Q|``."""
    return not isinstance(inst, Meta) and (is_symbolic(inst.q) or is_symbolic(inst.r))


def is_concrete(inst: Instruction) -> bool:
    refs = [inst.q, inst.r]
    if isinstance(inst, Meta):
        refs += [inst.j.q, inst.j.r]
    return not any(is_symbolic(x) for x in refs)


def instantiate_ref(ref: StateRef, q_count: int) -> int:
    if isinstance(ref, QRel):
        if ref.c > q_count:
            raise InstantiationRangeError(f"{ref} is negative when |Q| = {q_count}")
        return q_count - ref.c
    return ref


def instantiate(inst: Instruction, q_count: int) -> Instruction:
    """Resolve every symbolic reference, including those inside J, against ``q_count``."""
    q = instantiate_ref(inst.q, q_count)
    r = instantiate_ref(inst.r, q_count)
    if isinstance(inst, Meta):
        return replace(inst, q=q, r=r, j=instantiate(inst.j, q_count))
    return replace(inst, q=q, r=r)


def validate_uniqueness(instructions: Iterable[Instruction]) -> list[tuple[Instruction, Instruction]]:
    """Return every pair of distinct instructions sharing a first coordinate pair.

    Symbolic and concrete states are compared structurally, so ``|Q|-1`` and
    ``8`` never collide here; dispatch settles that case by precedence.
    """
    seen: dict[tuple[StateRef, str], list[Instruction]] = {}
    for inst in instructions:
        seen.setdefault(inst.key, []).append(inst)
    bad = []
    for group in seen.values():
        for i in range(len(group)):
            for k in range(i + 1, len(group)):
                bad.append((group[i], group[k]))
    return bad


def lookup(
    instructions: Iterable[Instruction], state: int, scanned: str, q_count: int
) -> Instruction | None:
    concrete = None
    symbolic = []
    for inst in instructions:
        if inst.a != scanned:
            continue
        if isinstance(inst.q, QRel):
            if inst.q.c <= q_count and q_count - inst.q.c == state:
                symbolic.append(inst)
        elif inst.q == state:
            concrete = inst
    if concrete is not None:
        return concrete
    if len(symbolic) > 1:
        raise AmbiguousDispatch(f"{len(symbolic)} symbolic instructions match state {state}, {scanned!r}")
    return symbolic[0] if symbolic else None


def state_label(state: StateRef, names: Sequence[str] | None = None) -> str:
    if isinstance(state, QRel):
        return str(state)
    if names is not None and 0 <= state < len(names):
        return names[state]
    return str(state)


def format_instruction(
    inst: Instruction, names: Sequence[str] | None = None, bit: int | None = None
) -> str:
    """Render in tuple syntax; ``bit`` shows a random draw as ``b_qr``."""
    q = state_label(inst.q, names)
    r = state_label(inst.r, names)
    if isinstance(inst, Random):
        if bit is None:
            return f"({q}, {inst.a}, {r}, {inst.move})"
        return f"({q}, {inst.a}, {r}, {bit}_qr, {inst.move})"
    body = f"{q}, {inst.a}, {r}, {inst.alpha}, {inst.move}"
    if isinstance(inst, Meta):
        return f"({body}, {format_instruction(inst.j, names)})"
    return f"({body})"


@dataclass(frozen=True)
class MachineDef:
    """An ex-machine program. ``instructions`` keeps source order."""

    state_count: int
    state_names: tuple[str, ...]
    alphabet: tuple[str, ...]
    start: int
    halt_states: frozenset[int]
    instructions: tuple[Instruction, ...]
    comments: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self) -> None:
        if len(self.state_names) != self.state_count:
            raise ValueError("state_names must have one label per state")
        if tuple(self.alphabet[:3]) != BASE_ALPHABET:
            raise ValueError("alphabet must begin with 0, 1, #")
        if len(set(self.alphabet)) != len(self.alphabet):
            raise ValueError("duplicate alphabet symbol")

    @classmethod
    def build(
        cls,
        instructions: Iterable[Instruction],
        *,
        state_count: int,
        start: int = 0,
        halt_states: Iterable[int] = (),
        extras: Iterable[str] = (),
        state_names: Sequence[str] | None = None,
        comments: Sequence[str] = (),
        check: bool = True,
    ) -> MachineDef:
        extras = tuple(s for s in extras if s not in BASE_ALPHABET)
        names = tuple(state_names) if state_names is not None else tuple(str(i) for i in range(state_count))
        m = cls(state_count, names, BASE_ALPHABET + extras, start, frozenset(halt_states), tuple(instructions), tuple(comments))
        if check:
            bad = validate_uniqueness(m.instructions)
            if bad:
                a, b = bad[0]
                raise UniquenessViolation(f"{format_instruction(a)} and {format_instruction(b)} share state and symbol")
            m.check_symbols()
        return m

    def check_symbols(self) -> None:
        allowed = set(self.alphabet)
        for inst in self.instructions:
            syms = [inst.a]
            if not isinstance(inst, Random):
                syms.append(inst.alpha)
            if isinstance(inst, Meta):
                syms.append(inst.j.a)
                if isinstance(inst.j, Standard):
                    syms.append(inst.j.alpha)
            for s in syms:
                if s not in allowed:
                    raise ParseError(f"symbol {s!r} is not in the alphabet")
            if inst.move not in MOVES:
                raise ParseError(f"move {inst.move} is not -1, 0 or 1")

    @property
    def extras(self) -> tuple[str, ...]:
        return self.alphabet[3:]

    def is_standard(self) -> bool:
        return all(isinstance(i, Standard) and is_concrete(i) for i in self.instructions)

    def with_instructions(self, instructions: Iterable[Instruction], state_count: int | None = None) -> MachineDef:
        n = self.state_count if state_count is None else state_count
        names = grow_names(self.state_names, n)
        return replace(self, instructions=tuple(instructions), state_count=n, state_names=names)

    def structurally_equal(self, other: MachineDef) -> bool:
        """Same instruction multiset, state count, alphabet, start and halting states."""
        return (
            Counter(self.instructions) == Counter(other.instructions)
            and self.state_count == other.state_count
            and set(self.alphabet) == set(other.alphabet)
            and self.start == other.start
            and self.halt_states == other.halt_states
        )


def grow_names(names: Sequence[str], n: int) -> tuple[str, ...]:
    names = tuple(names[:n])
    taken = set(names)
    out = list(names)
    for i in range(len(out), n):
        label = str(i)
        while label in taken:
            label = f"s{label}"
        taken.add(label)
        out.append(label)
    return tuple(out)


def apply_update(machine: MachineDef, j: Instruction) -> MachineDef:
    """Append ``j``, first removing any instruction with the same ``(q, a)``."""
    if isinstance(j, Meta) or not is_concrete(j):
        raise ValueError("update instruction must be a concrete standard or random instruction")
    kept = [i for i in machine.instructions if i.key != j.key]
    kept.append(j)
    return machine.with_instructions(kept)
