"""Execution of ex-machines.

The engine keeps the program as an insertion-ordered dict keyed by the
structural ``(q, a)`` pair, so replacing an instruction is a delete plus an
append, exactly like :func:`isa.apply_update`.
"""

from __future__ import annotations

import enum
import json
from collections.abc import Iterable, Iterator
from dataclasses import asdict, dataclass, field

from . import kernel
from .core import BLANK, Configuration, Tape, render_window, tape_from_literal
from .errors import BitsExhausted, MachineError, UnknownSymbol
from .isa import (
    Instruction,
    MachineDef,
    Meta,
    QRel,
    Random,
    Standard,
    format_instruction,
    grow_names,
    instantiate,
    is_simple_meta,
    validate_uniqueness,
)
from .randomness import BitSource

DEFAULT_MAX_STEPS = 10**6


class Outcome(enum.Enum):
    CONTINUED = "continued"
    HALTED = "halted"
    STUCK = "stuck"
    BITS_EXHAUSTED = "bits_exhausted"
    STEP_LIMIT = "step_limit"


@dataclass(frozen=True)
class StepOutcome:
    kind: Outcome
    state: int
    head: int
    symbol: str | None = None
    detail: str = ""

    @property
    def terminal(self) -> bool:
        return self.kind is not Outcome.CONTINUED


@dataclass(frozen=True)
class TraceRecord:
    step: int
    state: int
    state_label: str
    tape: str
    head: int
    executed: str
    new: str | None = None
    bit: int | None = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), ensure_ascii=False)


@dataclass(frozen=True)
class ResourceReport:
    steps: int
    bits_consumed: int
    final_state_count: int
    final_instruction_count: int
    tape_support: int


@dataclass
class RunResult:
    outcome: StepOutcome
    machine: MachineDef
    trace: list[TraceRecord]
    report: ResourceReport
    tape: Tape
    head: int

    @property
    def scanned(self) -> str:
        return self.tape.read(self.head)

    def final_config(self) -> Configuration:
        return Configuration.capture(self.outcome.state, self.head, self.tape)


class _NoBits(BitSource):
    def _draw(self) -> int:
        raise BitsExhausted("machine executed a random instruction but no bit source was given")


class RunState:
    """Mutable state of one run; owns a private copy of the program."""

    def __init__(self, machine: MachineDef, tape: Tape, head: int, source: BitSource | None = None,
                 record: bool = False, pad: int = 2):
        self.program: dict[tuple, Instruction] = {}
        for inst in machine.instructions:
            self.program[inst.key] = inst
        self.base = machine
        self.state_count = machine.state_count
        self.names = list(machine.state_names)
        self.halts = machine.halt_states
        self.alphabet = frozenset(machine.alphabet)
        self.state = machine.start
        self.head = head
        self.tape = tape
        self.source = source if source is not None else _NoBits()
        self.steps = 0
        self.record = record
        self.pad = pad
        self.trace: list[TraceRecord] = []

    def machine(self) -> MachineDef:
        return self.base.with_instructions(self.program.values(), self.state_count)

    def config(self) -> Configuration:
        return Configuration.capture(self.state, self.head, self.tape)

    def lookup(self, state: int, scanned: str) -> Instruction | None:
        inst = self.program.get((state, scanned))
        if inst is not None:
            return inst
        c = self.state_count - state
        if c >= 0:
            return self.program.get((QRel(c), scanned))
        return None

    def update(self, j: Instruction) -> None:
        self.program.pop(j.key, None)
        self.program[j.key] = j

    def _grow_to(self, n: int) -> None:
        if n > self.state_count:
            self.state_count = n
            self.names = list(grow_names(self.names, n))


def step(rs: RunState) -> StepOutcome:
    """Execute one instruction; never called from a halting state."""
    if rs.state in rs.halts:
        return StepOutcome(Outcome.HALTED, rs.state, rs.head)
    n = rs.state_count
    scanned = rs.tape.read(rs.head)
    source_inst = rs.lookup(rs.state, scanned)
    if source_inst is None:
        return StepOutcome(Outcome.STUCK, rs.state, rs.head, scanned)
    inst = instantiate(source_inst, n)

    bit = None
    if isinstance(inst, Random):
        try:
            bit = rs.source.next_bit()
        except BitsExhausted as exc:
            return StepOutcome(Outcome.BITS_EXHAUSTED, rs.state, rs.head, scanned, str(exc))
        written = str(bit)
    else:
        written = inst.alpha
    if written not in rs.alphabet:
        raise UnknownSymbol(f"instruction writes {written!r}, which is not in the alphabet")

    r = inst.r
    if r > n:
        raise MachineError(f"transition to state {r} but |Q| = {n}")
    grows = r == n or (isinstance(inst, Meta) and n in (inst.j.q, inst.j.r))

    rs.tape.write(rs.head, written)
    rs.head += inst.move
    rs.state = r
    rs.steps += 1
    if grows:
        rs._grow_to(n + 1)

    added = None
    if isinstance(inst, Meta):
        added = inst.j
    elif is_simple_meta(source_inst):
        added = inst
    if added is not None:
        rs.update(added)

    if rs.record:
        shown = source_inst if isinstance(source_inst, Meta | Random) else inst
        rs.trace.append(TraceRecord(
            step=rs.steps,
            state=rs.state,
            state_label=_label(rs.names, rs.state),
            tape=render_window(rs.tape, rs.head, rs.pad),
            head=rs.head,
            executed=format_instruction(shown, rs.names, bit),
            new=None if added is None else format_instruction(added, rs.names),
            bit=bit,
        ))
    if rs.state in rs.halts:
        return StepOutcome(Outcome.HALTED, rs.state, rs.head, rs.tape.read(rs.head))
    return StepOutcome(Outcome.CONTINUED, rs.state, rs.head)


def _label(names: list[str], state: int) -> str:
    return names[state] if 0 <= state < len(names) else str(state)


def check_finite_conditions(machine: MachineDef, tape: Tape | None = None) -> str | None:
    """Return a description of the first violated condition, or ``None``."""
    if machine.state_count < 1:
        return "the machine has no states"
    if len(machine.state_names) != machine.state_count:
        return "state labels do not match the state count"
    if not 0 <= machine.start < machine.state_count:
        return f"start state {machine.start} is outside 0..{machine.state_count - 1}"
    if any(not 0 <= h < machine.state_count for h in machine.halt_states):
        return "a halting state lies outside the state set"
    if not set(machine.alphabet) >= {"0", "1", BLANK}:
        return "alphabet lacks 0, 1 or #"
    bad = validate_uniqueness(machine.instructions)
    if bad:
        return f"{len(bad)} instruction pairs share state and symbol"
    if tape is not None:
        extra = {s for _, s in tape.items()} - set(machine.alphabet)
        if extra:
            return f"tape holds symbols outside the alphabet: {sorted(extra)}"
    return None


def _prepare_tape(tape: str | Tape | tuple[Tape, int], machine: MachineDef) -> tuple[Tape, int]:
    if isinstance(tape, str):
        return tape_from_literal(tape, machine.alphabet)
    if isinstance(tape, Tape):
        return tape.copy(), 0
    t, h = tape
    return t.copy(), h


def run(
    machine: MachineDef,
    tape: str | Tape | tuple[Tape, int] = "# ##",
    source: BitSource | None = None,
    max_steps: int = DEFAULT_MAX_STEPS,
    trace: bool = False,
    check: bool = False,
    pad: int = 2,
    fast: bool = True,
) -> RunResult:
    """Run until halt, stuck, bit exhaustion or ``max_steps`` steps.

    With ``check`` set, the program is re-validated after every step and the
    growth bounds on states and instructions are asserted.
    """
    if max_steps < 1:
        raise ValueError("max_steps must be at least 1")
    t, head = _prepare_tape(tape, machine)
    problem = check_finite_conditions(machine, t)
    if problem:
        raise MachineError(problem)
    if fast and not trace and not check and machine.is_standard():
        res = _run_compiled(machine, t, head, max_steps)
        if res is not None:
            return res

    rs = RunState(machine, t, head, source, record=trace, pad=pad)
    bits_before = rs.source.bits_consumed
    n0, i0 = machine.state_count, len(machine.instructions)
    out = StepOutcome(Outcome.HALTED, rs.state, rs.head) if rs.state in rs.halts else None
    while out is None or out.kind is Outcome.CONTINUED:
        if rs.steps >= max_steps:
            out = StepOutcome(Outcome.STEP_LIMIT, rs.state, rs.head)
            break
        out = step(rs)
        if check:
            _check_invariants(rs, n0, i0)
    evolved = rs.machine()
    report = ResourceReport(rs.steps, rs.source.bits_consumed - bits_before, evolved.state_count,
                            len(evolved.instructions), len(rs.tape))
    return RunResult(out, evolved, rs.trace, report, rs.tape, rs.head)


def _check_invariants(rs: RunState, n0: int, i0: int) -> None:
    bad = validate_uniqueness(rs.program.values())
    if bad:
        raise AssertionError(f"uniqueness violated after step {rs.steps}: {bad[0]}")
    if rs.state_count > n0 + rs.steps:
        raise AssertionError(f"state count {rs.state_count} exceeds {n0} + {rs.steps}")
    if len(rs.program) > i0 + rs.steps:
        raise AssertionError(f"instruction count {len(rs.program)} exceeds {i0} + {rs.steps}")


def iter_configurations(machine: MachineDef, tape="# ##", max_steps: int = DEFAULT_MAX_STEPS,
                        source: BitSource | None = None) -> Iterator[tuple[Configuration, StepOutcome | None]]:
    """Yield the initial configuration and then one per executed step."""
    t, head = _prepare_tape(tape, machine)
    rs = RunState(machine, t, head, source)
    yield rs.config(), None
    if rs.state in rs.halts:
        return
    while rs.steps < max_steps:
        out = step(rs)
        if out.kind in (Outcome.STUCK, Outcome.BITS_EXHAUSTED):
            yield rs.config(), out
            return
        yield rs.config(), out
        if out.kind is Outcome.HALTED:
            return


def detect_repeat_configuration(configs: Iterable[Configuration]) -> tuple[int, int] | None:
    """Earliest ``(i, j)`` with ``configs[i] == configs[j]``, scanning in order."""
    seen: dict[Configuration, int] = {}
    for j, c in enumerate(configs):
        i = seen.get(c)
        if i is not None:
            return i, j
        seen[c] = j
    return None


# ---------------------------------------------------------------- compiled path

def _symbol_codes(machine: MachineDef) -> list[str]:
    return [BLANK] + [s for s in machine.alphabet if s != BLANK]


def compile_table(machine: MachineDef):
    """Dense (next, write, move) table over symbol codes with ``#`` as code 0."""
    import numpy as np

    syms = _symbol_codes(machine)
    code = {s: i for i, s in enumerate(syms)}
    nsym = len(syms)
    table = np.full(machine.state_count * nsym * 3, -1, dtype=np.int32)
    for inst in machine.instructions:
        if not isinstance(inst, Standard) or not isinstance(inst.q, int) or not isinstance(inst.r, int):
            return None
        if inst.r >= machine.state_count or inst.q >= machine.state_count:
            return None
        base = (inst.q * nsym + code[inst.a]) * 3
        table[base:base + 3] = (inst.r, code[inst.alpha], inst.move)
    halt = np.zeros(machine.state_count, dtype=np.uint8)
    for h in machine.halt_states:
        halt[h] = 1
    return table, nsym, halt, syms, code


def _run_compiled(machine: MachineDef, tape: Tape, head: int, max_steps: int) -> RunResult | None:
    compiled = compile_table(machine)
    if compiled is None:
        return None
    table, nsym, halt, syms, code = compiled
    b = tape.bounds()
    lo, hi = (head, head) if b is None else (min(b[0], head), max(b[1], head))
    margin = 64
    offset = lo - margin
    arr = bytearray(hi - lo + 1 + 2 * margin)
    for i, s in tape.items():
        arr[i - offset] = code[s]
    status, state, arr, pos, steps, origin = kernel.run_table(
        table, nsym, halt, arr, head - offset, machine.start, max_steps)
    offset -= origin
    out_tape = Tape({i + offset: syms[c] for i, c in enumerate(arr) if c})
    out_head = pos + offset
    kind = {kernel.HALTED: Outcome.HALTED, kernel.STUCK: Outcome.STUCK, kernel.LIMIT: Outcome.STEP_LIMIT}[status]
    out = StepOutcome(kind, state, out_head, out_tape.read(out_head))
    report = ResourceReport(steps, 0, machine.state_count, len(machine.instructions), len(out_tape))
    return RunResult(out, machine, [], report, out_tape, out_head)


# ---------------------------------------------------------------- trace output

TRACE_HEADER = ("STATE", "TAPE", "TAPE HEAD", "INSTRUCTION EXECUTED", "NEW INSTRUCTION")


def format_trace_text(records: list[TraceRecord]) -> str:
    rows = [(r.state_label, r.tape, str(r.head), r.executed, r.new or "") for r in records]
    widths = [max([len(h)] + [len(row[k]) for row in rows]) for k, h in enumerate(TRACE_HEADER)]
    lines = []
    for row in [TRACE_HEADER, *rows]:
        cells = [row[0].rjust(widths[0]), row[1].ljust(widths[1]), row[2].rjust(widths[2]),
                 row[3].ljust(widths[3]), row[4]]
        lines.append("   ".join(cells).rstrip())
    return "\n".join(lines) + "\n"


def format_trace_json(records: list[TraceRecord]) -> str:
    return "".join(r.to_json() + "\n" for r in records)
