from __future__ import annotations

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from exmachine.core import Tape, tape_from_literal
from exmachine.isa import MachineDef, QRel, Standard
from exmachine.parser import load_machine
from exmachine.phimap import (
    RationalPoint,
    UnsupportedByPhi,
    ValueFunction,
    domain_squares,
    nu_value,
    phi_config,
    phi_step_map,
    verify_correspondence,
)


def random_pm_machine(rng: random.Random, k: int = 3, extras: tuple[str, ...] = ()) -> MachineDef:
    alphabet = ("0", "1", "#") + extras
    insts = []
    for q in range(k):
        for a in alphabet:
            if rng.random() < 0.85:
                insts.append(Standard(q, a, rng.randrange(k + 1), rng.choice(alphabet), rng.choice((-1, 1))))
    return MachineDef.build(insts, state_count=k + 1, halt_states=[k], extras=extras)


def naive_phi(state: int, head: int, tape: Tape, vf: ValueFunction, width: int = 60) -> tuple[Fraction, Fraction]:
    """Truncated digit sums plus the exact blank remainder, written out term by term."""
    B = Fraction(vf.base)
    x = sum(vf.nu(tape.read(head + t)) * B ** (1 - t) for t in range(width))
    y = vf.nu(state) * B + sum(vf.nu(tape.read(head - 1 - t)) * B ** (-t) for t in range(width))
    blank = vf.nu("#")
    x += blank * B ** (1 - width) * B / (B - 1)
    y += blank * B ** (-width) * B / (B - 1)
    return x, y


def test_value_function_collatz():
    m = load_machine("collatz")
    vf = ValueFunction.for_machine(m)
    assert vf.base == 20
    assert [nu_value(s, vf) for s in m.alphabet] == [1, 2, 3, 4]
    h = m.state_names.index("h")
    assert nu_value(h, vf) == 0
    working = [q for q in range(m.state_count) if q != h]
    assert [vf.nu(q) for q in working] == list(range(5, 20))
    with pytest.raises(KeyError):
        vf.nu("Z")


def test_value_function_needs_single_halt():
    m = MachineDef.build([], state_count=3, halt_states=[1, 2])
    with pytest.raises(UnsupportedByPhi):
        ValueFunction.for_machine(m)


def test_blank_tape_closed_form():
    m = load_machine("collatz")
    vf = ValueFunction.for_machine(m)
    B, b = vf.base, vf.nu("#")
    p = phi_config((m.start, 0, Tape()), vf)
    assert p.x == Fraction(b * B * B, B - 1)
    assert p.y == vf.nu(m.start) * B + Fraction(b * B, B - 1)


@settings(max_examples=100)
@given(st.dictionaries(st.integers(-6, 6), st.sampled_from(["0", "1", "E"]), max_size=8),
       st.integers(-8, 8), st.integers(0, 15))
def test_phi_matches_naive_sum(cells, head, state):
    m = load_machine("collatz")
    vf = ValueFunction.for_machine(m)
    tape = Tape(cells)
    x, y = naive_phi(state, head, tape, vf)
    p = phi_config((state, head, tape), vf)
    assert (p.x, p.y) == (x, y)


@settings(max_examples=150)
@given(st.dictionaries(st.integers(-4, 4), st.sampled_from(["0", "1"]), max_size=6), st.integers(-5, 5),
       st.integers(0, 2),
       st.dictionaries(st.integers(-4, 4), st.sampled_from(["0", "1"]), max_size=6), st.integers(-5, 5),
       st.integers(0, 2))
def test_phi_is_injective_up_to_translation(c1, h1, q1, c2, h2, q2):
    m = MachineDef.build([], state_count=4, halt_states=[3])
    vf = ValueFunction.for_machine(m)
    t1, t2 = Tape(c1), Tape(c2)
    same = q1 == q2 and all(t1.read(h1 + d) == t2.read(h2 + d) for d in range(-12, 13))
    assert (phi_config((q1, h1, t1), vf) == phi_config((q2, h2, t2), vf)) == same


def test_unit_square_reads_state_and_window():
    m = load_machine("collatz")
    vf = ValueFunction.for_machine(m)
    tape, head = tape_from_literal("#1 1E#")
    q = m.start
    p = phi_config((q, head, tape), vf)
    B = vf.base
    assert p.unit_square() == (B * vf.nu("1") + vf.nu("E"), B * vf.nu(q) + vf.nu("1"))
    assert RationalPoint(Fraction(7, 2), Fraction(-1, 3)).unit_square() == (3, -1)


def test_step_maps_reject_unsupported():
    vf = ValueFunction.for_machine(load_machine("collatz"))
    with pytest.raises(UnsupportedByPhi):
        phi_step_map(Standard(0, "#", 1, "#", 0), "#", "#", vf)
    with pytest.raises(UnsupportedByPhi):
        phi_step_map(Standard(QRel(1), "#", 1, "#", 1), "#", "#", vf)
    with pytest.raises(UnsupportedByPhi):
        verify_correspondence(load_machine("qx"), "# #a#")


def test_domain_squares_cover_each_instruction():
    m = load_machine("collatz")
    vf = ValueFunction.for_machine(m)
    squares = domain_squares(m, vf)
    assert len(squares) == len(m.instructions) * len(m.alphabet) ** 2


def test_collatz_correspondence():
    rep = verify_correspondence(load_machine("collatz"), "# #11111#", steps=10**4)
    assert rep.all_equal and rep.ok
    assert rep.steps_checked == 384
    assert rep.halted_at == 384 == rep.exit_at


@pytest.mark.parametrize("seed", range(20))
def test_random_machines_correspond(seed):
    rng = random.Random(seed)
    m = random_pm_machine(rng, k=rng.randint(1, 4), extras=("E",) if seed % 3 == 0 else ())
    rep = verify_correspondence(m, "# ##", steps=200)
    assert rep.all_equal, rep.mismatches
    assert rep.coincide


def test_immortal_cycler_never_leaves_squares():
    m = MachineDef.build([Standard(0, "#", 1, "1", 1), Standard(1, "#", 0, "0", 1)],
                         state_count=3, halt_states=[2])
    rep = verify_correspondence(m, "# ##", steps=300)
    assert rep.steps_checked == 300 and rep.exit_at is None and rep.ok


def test_stuck_machine_exits_when_stuck():
    m = MachineDef.build([Standard(0, "#", 1, "1", 1), Standard(1, "#", 0, "0", -1)],
                         state_count=3, halt_states=[2])
    rep = verify_correspondence(m, "# ##", steps=50)
    assert rep.stop_reason == "stuck" and rep.exit_at == rep.steps_checked == 2 and rep.ok


def test_report_rendering():
    rep = verify_correspondence(load_machine("collatz"), "# #111#", steps=10**4)
    assert "steps checked" in rep.to_text()
    assert '"all_equal": true' in rep.to_json()
