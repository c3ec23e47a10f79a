"""The Q(x) machine family and its language-membership protocol.

``Q(a0 ... am x)`` answers ``a^n`` queries for n <= m from concrete
instructions; larger n are settled by random draws and the answers become
part of the machine as it evolves.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass

from .engine import DEFAULT_MAX_STEPS, Outcome, run
from .errors import BitsExhausted, InvalidPrefix, MachineStuck, NotQFamily, ProtocolError, StepLimitExceeded
from .isa import MachineDef, Meta, QRel, Random, Standard
from .randomness import BitSource

NAMES = ("0", "h", "n", "y", "t", "v", "w", "x", "8")
H, N, Y, T, V, W, X = 1, 2, 3, 4, 5, 6, 7
FIRST = 8
EXTRAS = ("Y", "N", "a")


def _base_instructions() -> list:
    top, new = QRel(1), QRel(0)
    grow = Standard(top, "a", new, "a", 1)
    return [
        Standard(0, "#", FIRST, "#", 1),
        Standard(FIRST, "#", X, "#", 0),
        Standard(Y, "#", H, "Y", 0),
        Standard(N, "#", H, "N", 0),
        Random(X, "#", X, 0),
        Random(X, "a", T, 0),
        Meta(X, "0", V, "#", 0, Standard(top, "#", N, "#", 1)),
        Meta(X, "1", W, "#", 0, Standard(top, "#", Y, "#", 1)),
        Meta(T, "0", W, "a", 0, Standard(top, "#", N, "#", 1)),
        Meta(T, "1", W, "a", 0, Standard(top, "#", Y, "#", 1)),
        Meta(V, "#", N, "#", 1, grow),
        Meta(W, "#", Y, "#", 1, grow),
        Meta(W, "a", new, "a", 1, grow),
        Standard(top, "a", X, "a", 0),
        Standard(top, "#", X, "#", 0),
    ]


def format_prefix(prefix: Sequence[int]) -> str:
    return "".join(map(str, prefix))


def machine_title(prefix: Sequence[int]) -> str:
    return f"Q({format_prefix(prefix)} x)" if prefix else "Q(x)"


def _check_prefix(prefix: Iterable) -> list[int]:
    if isinstance(prefix, str):
        prefix = list(prefix)
    out = []
    for i, a in enumerate(prefix):
        if a in (0, 1, "0", "1") and not isinstance(a, bool):
            out.append(int(a))
        else:
            raise InvalidPrefix(f"prefix element a_{i} = {a!r} is not 0 or 1")
    return out


def build_qx(prefix: Iterable = ()) -> MachineDef:
    """Construct ``Q(a0 ... am x)`` directly from its bits."""
    bits = _check_prefix(prefix)
    insts = _base_instructions()
    if bits:
        del insts[1]
    for i, a in enumerate(bits):
        q = FIRST + i
        insts.append(Standard(q, "#", Y if a else N, "#", 1))
        insts.append(Standard(q, "a", q + 1, "a", 1))
    count = FIRST + 1 + len(bits)
    names = NAMES + tuple(str(i) for i in range(FIRST + 1, count))
    return MachineDef.build(insts, state_count=count, start=0, halt_states=[H], extras=EXTRAS,
                            state_names=names, comments=[machine_title(bits), f"prefix: {format_prefix(bits)}"])


def extract_language_prefix(machine: MachineDef) -> list[int]:
    """Read a0 ... am back off the concrete ``(i, #, y|n, #, 1)`` instructions."""
    names = machine.state_names
    try:
        y, n = names.index("y"), names.index("n")
    except ValueError:
        raise NotQFamily("machine has no states labelled y and n") from None
    table = {(i.q, i.a): i for i in machine.instructions if isinstance(i, Standard)}
    if not any(isinstance(i.q, QRel) for i in machine.instructions):
        raise NotQFamily("machine has no symbolic instructions")
    bits = []
    q = FIRST
    while True:
        inst = table.get((q, "#"))
        if inst is None or isinstance(inst.r, QRel):
            break
        if inst.r == X and inst.alpha == "#" and inst.move == 0:
            break
        if inst.alpha != "#" or inst.move != 1 or inst.r not in (y, n):
            raise NotQFamily(f"instruction for ({q}, #) does not follow the Q(x) pattern")
        bits.append(1 if inst.r == y else 0)
        step = table.get((q, "a"))
        if step is None or step.r != q + 1:
            raise NotQFamily(f"missing ({q}, a, {q + 1}, a, 1)")
        q += 1
    if q == FIRST and (FIRST, "#") not in table:
        raise NotQFamily("neither (8, #, x, #, 0) nor a determined bit is present")
    return bits


@dataclass(frozen=True)
class MembershipVerdict:
    answer: bool
    machine: MachineDef
    bits_used: int
    steps: int

    @property
    def symbol(self) -> str:
        return "Y" if self.answer else "N"


def unary_tape(n: int) -> str:
    return "# #" + "a" * n + "#"


def membership(machine: MachineDef, n: int, source: BitSource | None = None,
               max_steps: int = DEFAULT_MAX_STEPS, trace: bool = False, check: bool = False):
    """Ask whether ``a^n`` is in the machine's language; returns (verdict, run result)."""
    if n < 0:
        raise ValueError("n must be non-negative")
    res = run(machine, unary_tape(n), source, max_steps=max_steps, trace=trace, check=check)
    kind = res.outcome.kind
    if kind is Outcome.STUCK:
        raise MachineStuck(res.outcome.state, res.outcome.symbol or "#")
    if kind is Outcome.BITS_EXHAUSTED:
        raise BitsExhausted(res.outcome.detail or "bit source exhausted")
    if kind is Outcome.STEP_LIMIT:
        raise StepLimitExceeded(f"no halt within {max_steps} steps")
    scanned = res.scanned
    if scanned not in ("Y", "N"):
        raise ProtocolError(f"machine halted scanning {scanned!r} instead of Y or N")
    evolved = res.machine
    try:
        prefix = extract_language_prefix(evolved)
        evolved = _retitle(evolved, prefix)
    except NotQFamily:
        pass
    verdict = MembershipVerdict(scanned == "Y", evolved, res.report.bits_consumed, res.report.steps)
    return verdict, res


def _retitle(m: MachineDef, prefix: list[int]) -> MachineDef:
    from dataclasses import replace

    return replace(m, comments=(machine_title(prefix), f"prefix: {format_prefix(prefix)}"))


def evolve_sequence(machine: MachineDef, queries: Iterable[int], source: BitSource | None = None,
                    max_steps: int = DEFAULT_MAX_STEPS) -> tuple[MachineDef, list[MembershipVerdict]]:
    verdicts = []
    for n in queries:
        v, _ = membership(machine, n, source, max_steps=max_steps)
        verdicts.append(v)
        machine = v.machine
    return machine, verdicts


def psi(n: int) -> str:
    """Binary string paired with ``a^n`` in length-then-lexicographic order."""
    if n < 0:
        raise ValueError("n must be non-negative")
    return bin(n + 1)[3:]


def psi_inv(s: str) -> int:
    if any(c not in "01" for c in s):
        raise ValueError(f"not a binary string: {s!r}")
    return int("1" + s, 2) - 1
