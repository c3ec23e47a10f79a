"""Embedding of standard-machine configurations into exact rational points.

With value function nu and base B, a configuration (q, k, T) maps to

    x = nu(T_k) B + nu(T_{k+1}) + nu(T_{k+2}) / B + ...
    y = nu(q) B + nu(T_{k-1}) + nu(T_{k-2}) / B + ...

and each machine step becomes an affine map on the plane. Everything here
uses :class:`fractions.Fraction`; blank tails are summed in closed form.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from math import floor

from .core import BLANK, Configuration, Tape
from .engine import Outcome, RunState, _prepare_tape, step
from .errors import MachineError
from .isa import MachineDef, Standard, is_concrete


class UnsupportedByPhi(MachineError):
    pass


@dataclass(frozen=True)
class ValueFunction:
    base: int
    symbols: dict[str, int]
    states: dict[int, int]
    halt: int | None

    @classmethod
    def for_machine(cls, machine: MachineDef) -> ValueFunction:
        if len(machine.halt_states) > 1:
            raise UnsupportedByPhi("the value function needs at most one halting state")
        halt = next(iter(machine.halt_states), None)
        symbols = {a: i for i, a in enumerate(machine.alphabet, start=1)}
        working = [q for q in range(machine.state_count) if q != halt]
        states = {q: i + len(symbols) for i, q in enumerate(working, start=1)}
        if halt is not None:
            states[halt] = 0
        return cls(len(symbols) + len(working) + 1, symbols, states, halt)

    def nu(self, entity: str | int) -> int:
        """nu of a symbol (given as text) or a state (given as its id)."""
        table = self.symbols if isinstance(entity, str) else self.states
        try:
            return table[entity]
        except KeyError:
            raise KeyError(f"{entity!r} has no value") from None


def nu_value(entity: str | int, vf: ValueFunction) -> int:
    return vf.nu(entity)


@dataclass(frozen=True)
class RationalPoint:
    x: Fraction
    y: Fraction

    def unit_square(self) -> tuple[int, int]:
        return floor(self.x), floor(self.y)


def _tail(nu_blank: int, base: int, first: int) -> Fraction:
    # sum over t >= 0 of nu_blank * B^(first - t)
    return Fraction(nu_blank * base) * Fraction(base) ** first / (base - 1)


def phi_config(config: Configuration | tuple[int, int, Tape], vf: ValueFunction) -> RationalPoint:
    if isinstance(config, Configuration):
        q, k, tape = config.state, config.head, config.tape()
    else:
        q, k, tape = config
    B = vf.base
    blank = vf.nu(BLANK)
    b = tape.bounds()
    hi = max(k + 1, b[1] if b else k + 1)
    lo = min(k - 1, b[0] if b else k - 1)
    Bf = Fraction(B)
    x = sum((vf.nu(tape.read(i)) * Bf ** (k + 1 - i) for i in range(k, hi + 1)), Fraction(0))
    x += _tail(blank, B, k - hi)
    y = Fraction(B * vf.nu(q))
    y += sum((vf.nu(tape.read(i)) * Bf ** (i - k + 1) for i in range(lo, k)), Fraction(0))
    y += _tail(blank, B, lo - k)
    return RationalPoint(x, y)


@dataclass(frozen=True)
class AffineMap:
    """(x, y) -> (ax x + bx, ay y + by)."""

    ax: Fraction
    bx: Fraction
    ay: Fraction
    by: Fraction

    def __call__(self, p: RationalPoint) -> RationalPoint:
        return RationalPoint(self.ax * p.x + self.bx, self.ay * p.y + self.by)


def phi_step_map(inst: Standard, scanned: str, left: str, vf: ValueFunction) -> AffineMap:
    """Affine image of one step; ``scanned`` is T_k and ``left`` is T_{k-1}."""
    if not isinstance(inst, Standard) or not is_concrete(inst):
        raise UnsupportedByPhi("only concrete standard instructions have affine images")
    B = Fraction(vf.base)
    tk, tl = vf.nu(scanned), vf.nu(left)
    q, r, alpha = vf.nu(inst.q), vf.nu(inst.r), vf.nu(inst.alpha)
    if inst.move == 1:
        return AffineMap(B, -B * B * tk, 1 / B, B * r + alpha - q)
    if inst.move == -1:
        return AffineMap(1 / B, B * tl + alpha - tk, B, B * r - B * B * q - B * tl)
    raise UnsupportedByPhi("move 0 has no affine image")


def domain_squares(machine: MachineDef, vf: ValueFunction) -> dict[tuple[int, int], Standard]:
    """Unit squares (by lower-left corner) on which each instruction acts."""
    B = vf.base
    out = {}
    for inst in machine.instructions:
        for right in machine.alphabet:
            for left in machine.alphabet:
                corner = (B * vf.nu(inst.a) + vf.nu(right), B * vf.nu(inst.q) + vf.nu(left))
                out[corner] = inst
    return out


@dataclass
class CorrespondenceReport:
    steps_checked: int = 0
    all_equal: bool = True
    mismatches: list[int] = field(default_factory=list)
    stop_reason: str = "steps"
    halted_at: int | None = None
    exit_at: int | None = None
    coincide: bool = True
    base: int = 0

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def to_text(self) -> str:
        lines = [
            f"base B              {self.base}",
            f"steps checked       {self.steps_checked}",
            f"affine images exact {'yes' if self.all_equal else 'no'}",
            f"stopped because     {self.stop_reason}",
            f"halted at step      {self.halted_at if self.halted_at is not None else '-'}",
            f"left squares at     {self.exit_at if self.exit_at is not None else '-'}",
            f"exit matches halt   {'yes' if self.coincide else 'no'}",
        ]
        if self.mismatches:
            lines.append(f"mismatched steps    {self.mismatches[:20]}")
        return "\n".join(lines) + "\n"

    @property
    def ok(self) -> bool:
        return self.all_equal and self.coincide


def verify_correspondence(machine: MachineDef, tape="# ##", steps: int = 1000) -> CorrespondenceReport:
    """Run the machine and its affine orbit side by side.

    Stops at halt, at a stuck configuration, at the first move-0 step, or
    after ``steps`` steps. Square exit is checked against the instruction
    domains independently of the engine's dispatch.
    """
    if not all(isinstance(i, Standard) and is_concrete(i) for i in machine.instructions):
        raise UnsupportedByPhi("machine must contain only concrete standard instructions")
    vf = ValueFunction.for_machine(machine)
    squares = domain_squares(machine, vf)
    t, head = _prepare_tape(tape, machine)
    rs = RunState(machine, t, head)
    rep = CorrespondenceReport(base=vf.base)
    point = phi_config((rs.state, rs.head, rs.tape), vf)

    def note_exit(at: int) -> None:
        if rep.exit_at is None and point.unit_square() not in squares:
            rep.exit_at = at

    note_exit(0)
    if rs.state in rs.halts:
        rep.halted_at = 0
        rep.stop_reason = "halted"
    while rep.halted_at is None and rep.steps_checked < steps:
        inst = rs.lookup(rs.state, rs.tape.read(rs.head))
        if inst is None:
            rep.stop_reason = "stuck"
            break
        if inst.move == 0:
            rep.stop_reason = "move-0 step"
            break
        fmap = phi_step_map(inst, rs.tape.read(rs.head), rs.tape.read(rs.head - 1), vf)
        image = fmap(point)
        out = step(rs)
        rep.steps_checked += 1
        point = phi_config((rs.state, rs.head, rs.tape), vf)
        if point != image:
            rep.all_equal = False
            rep.mismatches.append(rep.steps_checked)
        note_exit(rep.steps_checked)
        if out.kind is Outcome.HALTED:
            rep.halted_at = rep.steps_checked
            rep.stop_reason = "halted"
    if rep.stop_reason == "stuck":
        rep.coincide = rep.exit_at == rep.steps_checked
    elif rep.halted_at is not None:
        rep.coincide = rep.exit_at == rep.halted_at
    else:
        rep.coincide = rep.exit_at is None
    return rep
