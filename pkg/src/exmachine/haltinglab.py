"""A desk-scale halting lab: enumeration, bounded oracle, guided evolution.

Enumeration ranking (fixed; indices are stable across releases):

* Families come in order of state count k = 1, 2, ...; a k-state machine has
  working states 0..k-1 and halting state h = k.
* A program assigns each slot (q, a), taken in order q ascending then a in
  alphabet order, either nothing (digit 0) or option d-1, where options run
  over r in 0..k-1 then h, then alpha in alphabet order, then move -1, +1.
* Programs are read as mixed-radix numbers with the first slot most
  significant, and each program is paired with initial states 0..k-1 in turn.
"""

from __future__ import annotations

import enum
from collections.abc import Sequence
from dataclasses import dataclass, field

from .core import BASE_ALPHABET, Configuration, Tape
from .engine import Outcome, RunState, run, step
from .errors import OutOfRange, UndecidedIndices
from .isa import MachineDef, Standard
from .parser import load_machine
from .qxfamily import build_qx, evolve_sequence
from .randomness import ReplaySource

MOVES_PM = (-1, 1)


@dataclass(frozen=True)
class Family:
    """Machines with ``k`` working states over ``alphabet``."""

    k: int
    alphabet: tuple[str, ...] = BASE_ALPHABET

    @property
    def slots(self) -> list[tuple[int, str]]:
        return [(q, a) for q in range(self.k) for a in self.alphabet]

    @property
    def options(self) -> int:
        return (self.k + 1) * len(self.alphabet) * len(MOVES_PM)

    @property
    def programs(self) -> int:
        return (self.options + 1) ** len(self.slots)

    @property
    def size(self) -> int:
        return self.programs * self.k

    def option(self, d: int) -> tuple[int, str, int]:
        per_r = len(self.alphabet) * 2
        r, rest = divmod(d, per_r)
        ai, mi = divmod(rest, 2)
        return r, self.alphabet[ai], MOVES_PM[mi]

    def program(self, p: int) -> MachineDef:
        base = self.options + 1
        digits = []
        for _ in self.slots:
            p, d = divmod(p, base)
            digits.append(d)
        digits.reverse()
        insts = []
        for (q, a), d in zip(self.slots, digits):
            if d:
                r, alpha, y = self.option(d - 1)
                insts.append(Standard(q, a, r, alpha, y))
        names = [str(i) for i in range(self.k)] + ["h"]
        return MachineDef.build(insts, state_count=self.k + 1, start=0, halt_states=[self.k],
                                extras=self.alphabet[3:], state_names=names)


def _check_alphabet(alphabet: Sequence[str]) -> tuple[str, ...]:
    alphabet = tuple(alphabet)
    if alphabet[:3] != BASE_ALPHABET:
        raise ValueError("enumeration alphabet must start with 0, 1, #")
    return alphabet


def family_sizes(max_states: int, alphabet: Sequence[str] = BASE_ALPHABET) -> list[int]:
    alphabet = _check_alphabet(alphabet)
    return [Family(k, alphabet).size for k in range(1, max_states + 1)]


def enumeration_size(max_states: int, alphabet: Sequence[str] = BASE_ALPHABET) -> int:
    return sum(family_sizes(max_states, alphabet))


def enumerate_machine(i: int, max_states: int = 1, alphabet: Sequence[str] = BASE_ALPHABET) -> tuple[MachineDef, int]:
    """The ``i``-th (machine, initial state) pair under the ranking above."""
    alphabet = _check_alphabet(alphabet)
    if i < 0:
        raise OutOfRange(f"index {i} is negative")
    j = i
    for k in range(1, max_states + 1):
        fam = Family(k, alphabet)
        if j < fam.size:
            p, init = divmod(j, k)
            m = fam.program(p)
            return _with_start(m, init), init
        j -= fam.size
    raise OutOfRange(f"index {i} exceeds the {enumeration_size(max_states, alphabet)} machines with at most {max_states} states")


def _with_start(m: MachineDef, start: int) -> MachineDef:
    from dataclasses import replace

    return replace(m, start=start)


# ---------------------------------------------------------------- oracle

class Verdict(enum.Enum):
    HALTS = "halts"
    IMMORTAL = "immortal"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class Certificate:
    """Times ``i < j`` proving immortality.

    ``kind`` is ``"repeat"`` for an exact configuration repeat, or
    ``"right"``/``"left"`` for a cycle at the blank frontier that the head
    never crosses back over between ``i`` and ``j``.
    """

    kind: str
    i: int
    j: int


@dataclass(frozen=True)
class OracleVerdict:
    kind: Verdict
    steps: int = 0
    certificate: Certificate | None = None
    budget: int = 0

    @property
    def bit(self) -> int | None:
        return {Verdict.HALTS: 1, Verdict.IMMORTAL: 0}.get(self.kind)


def _start_state(machine: MachineDef, initial: int | None) -> RunState:
    m = machine if initial is None else _with_start(machine, initial)
    return RunState(m, Tape(), 0)


def _frontier(tape: Tape, head: int) -> tuple[bool, bool]:
    b = tape.bounds()
    if b is None:
        return True, True
    return head > b[1], head < b[0]


def bounded_halting_oracle(machine: MachineDef, initial: int | None = None, budget: int = 1000,
                           translated: bool = False) -> OracleVerdict:
    """Run on a blank tape for at most ``budget`` steps.

    Halting or getting stuck gives HALTS; an exact configuration repeat gives
    IMMORTAL. With ``translated`` set, a frontier cycle also counts as
    IMMORTAL. Anything else is UNKNOWN.
    """
    if budget < 1:
        raise ValueError("budget must be at least 1")
    if not machine.is_standard():
        raise ValueError("the oracle accepts standard machines only")
    rs = _start_state(machine, initial)
    if rs.state in rs.halts:
        return OracleVerdict(Verdict.HALTS, 0)
    seen: dict[Configuration, int] = {rs.config(): 0}
    right: list[tuple[int, int, int]] = []  # (time, head, state), heads non-decreasing
    left: list[tuple[int, int, int]] = []   # heads non-increasing
    if translated:
        _push_frontier(rs, 0, right, left)
    while rs.steps < budget:
        out = step(rs)
        if out.kind in (Outcome.HALTED, Outcome.STUCK):
            return OracleVerdict(Verdict.HALTS, rs.steps)
        t = rs.steps
        cfg = rs.config()
        if cfg in seen:
            return OracleVerdict(Verdict.IMMORTAL, t, Certificate("repeat", seen[cfg], t))
        seen[cfg] = t
        if translated:
            while right and right[-1][1] > rs.head:
                right.pop()
            while left and left[-1][1] < rs.head:
                left.pop()
            at_right, at_left = _frontier(rs.tape, rs.head)
            if at_right:
                for ti, _, s in right:
                    if s == rs.state:
                        return OracleVerdict(Verdict.IMMORTAL, t, Certificate("right", ti, t))
            if at_left:
                for ti, _, s in left:
                    if s == rs.state:
                        return OracleVerdict(Verdict.IMMORTAL, t, Certificate("left", ti, t))
            _push_frontier(rs, t, right, left)
    return OracleVerdict(Verdict.UNKNOWN, budget=budget)


def _push_frontier(rs: RunState, t: int, right: list, left: list) -> None:
    at_right, at_left = _frontier(rs.tape, rs.head)
    if at_right:
        right.append((t, rs.head, rs.state))
    if at_left:
        left.append((t, rs.head, rs.state))


def _history(machine: MachineDef, initial: int | None, upto: int) -> list[tuple[Configuration, int]]:
    rs = _start_state(machine, initial)
    hist = [(rs.config(), rs.head)]
    while rs.steps < upto:
        out = step(rs)
        if out.kind in (Outcome.HALTED, Outcome.STUCK):
            break
        hist.append((rs.config(), rs.head))
    return hist


def verify_verdict(machine: MachineDef, initial: int | None, verdict: OracleVerdict) -> bool:
    """Re-run independently of the oracle's bookkeeping and confirm the verdict."""
    if verdict.kind is Verdict.UNKNOWN:
        return True
    if verdict.kind is Verdict.HALTS:
        rs = _start_state(machine, initial)
        for _ in range(verdict.steps):
            if rs.state in rs.halts or step(rs).kind is Outcome.STUCK:
                return False
        return rs.state in rs.halts or step(rs).kind is Outcome.STUCK
    cert = verdict.certificate
    hist = _history(machine, initial, cert.j)
    if len(hist) <= cert.j:
        return False
    ci, cj = hist[cert.i][0], hist[cert.j][0]
    if cert.kind == "repeat":
        return ci == cj
    if ci.state != cj.state:
        return False
    heads = [h for _, h in hist[cert.i:cert.j + 1]]
    ti, tj = ci.tape(), cj.tape()
    if cert.kind == "right":
        return (_frontier(ti, ci.head)[0] and _frontier(tj, cj.head)[0] and min(heads) >= ci.head)
    return (_frontier(ti, ci.head)[1] and _frontier(tj, cj.head)[1] and max(heads) <= ci.head)


@dataclass(frozen=True)
class OracleRow:
    index: int
    initial: int
    verdict: OracleVerdict


def oracle_table(m: int, max_states: int = 1, alphabet: Sequence[str] = BASE_ALPHABET,
                 budget: int = 1000, translated: bool = True) -> list[OracleRow]:
    rows = []
    for i in range(m + 1):
        machine, init = enumerate_machine(i, max_states, alphabet)
        rows.append(OracleRow(i, init, bounded_halting_oracle(machine, init, budget, translated)))
    return rows


@dataclass
class GuidedEvolution:
    machine: MachineDef
    bits: list[int]
    rows: list[OracleRow] = field(default_factory=list)


def guided_evolution(m: int, max_states: int = 1, alphabet: Sequence[str] = BASE_ALPHABET,
                     budget: int = 1000, translated: bool = True) -> GuidedEvolution:
    """Evolve Q(x) along Q(h(0) x), Q(h(0) h(1) x), ... using oracle bits.

    Raises :class:`UndecidedIndices` when some index in 0..m stays UNKNOWN.
    """
    rows = oracle_table(m, max_states, alphabet, budget, translated)
    undecided = [r.index for r in rows if r.verdict.kind is Verdict.UNKNOWN]
    if undecided:
        raise UndecidedIndices(undecided)
    bits = [r.verdict.bit for r in rows]
    machine, _ = evolve_sequence(build_qx(), range(m + 1), ReplaySource(bits))
    return GuidedEvolution(machine, bits, rows)


# ---------------------------------------------------------------- Collatz survey

def collatz_orbit(n: int, limit: int = 10**6) -> list[int]:
    """Integer Collatz orbit of ``n`` up to and including the first 1."""
    if n < 1:
        raise ValueError("n must be positive")
    orbit = [n]
    while n != 1 and len(orbit) <= limit:
        n = n // 2 if n % 2 == 0 else 3 * n + 1
        orbit.append(n)
    return orbit


@dataclass(frozen=True)
class SurveyRow:
    n: int
    verdict: Verdict
    steps: int
    final_state: str
    ones: int | None
    error_symbol: bool
    orbit_length: int

    def to_dict(self) -> dict:
        return {"n": self.n, "verdict": self.verdict.value, "steps": self.steps,
                "final_state": self.final_state, "ones": self.ones,
                "error_symbol": self.error_symbol, "orbit_length": self.orbit_length}


def collatz_survey(odd_max: int, budget: int = 10**5, machine: MachineDef | None = None) -> list[SurveyRow]:
    """Run the Collatz machine on ``# #1^n#`` for every odd n from 1 to ``odd_max``."""
    if odd_max < 1 or odd_max % 2 == 0:
        raise ValueError("odd_max must be a positive odd number")
    if budget < 1:
        raise ValueError("budget must be at least 1")
    machine = machine or load_machine("collatz")
    rows = []
    for n in range(1, odd_max + 1, 2):
        res = run(machine, "# #" + "1" * n + "#", max_steps=budget)
        halted = res.outcome.kind is Outcome.HALTED
        symbols = [s for _, s in res.tape.items()]
        rows.append(SurveyRow(
            n=n,
            verdict=Verdict.HALTS if halted else Verdict.UNKNOWN,
            steps=res.report.steps,
            final_state=machine.state_names[res.outcome.state],
            ones=symbols.count("1") if halted else None,
            error_symbol="E" in symbols,
            orbit_length=len(collatz_orbit(n)),
        ))
    return rows
