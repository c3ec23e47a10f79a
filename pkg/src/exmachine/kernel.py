"""Selects the compiled kernel when it is built, else the pure-Python one.

Set ``EXM_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import os

if os.environ.get("EXM_PURE_PYTHON"):
    from ._kernel_py import GROW, HALTED, LIMIT, STUCK, BACKEND, run_standard, seeded_sign_changes, sign_changes_words
else:
    try:
        from ._kernel import GROW, HALTED, LIMIT, STUCK, BACKEND, run_standard, seeded_sign_changes, sign_changes_words
    except ImportError:
        from ._kernel_py import GROW, HALTED, LIMIT, STUCK, BACKEND, run_standard, seeded_sign_changes, sign_changes_words

__all__ = [
    "BACKEND", "GROW", "HALTED", "LIMIT", "STUCK",
    "run_standard", "run_table", "seeded_sign_changes", "sign_changes_words",
]


def run_table(table, nsym, halt, tape: bytearray, head: int, state: int, max_steps: int, impl=None):
    """Run to completion, growing ``tape`` whenever the head walks off an edge.

    Returns (status, state, tape, head, steps, origin) where ``origin`` is the
    array index of the caller's square 0 after any growth on the left.
    """
    run = impl or run_standard
    origin = 0
    total = 0
    while True:
        status, state, head, steps = run(table, nsym, halt, tape, head, state, max_steps - total)
        total += steps
        if status != GROW:
            return status, state, tape, head, total, origin
        extra = max(len(tape), 64)
        if head < 0:
            tape[0:0] = bytes(extra)
            head += extra
            origin += extra
        else:
            tape.extend(bytes(extra))
        if total >= max_steps:
            # budget ran out on the very step that left the tape
            st = HALTED if halt[state] else LIMIT
            return st, state, tape, head, total, origin
