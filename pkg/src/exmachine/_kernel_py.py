"""Pure-Python implementations with the same interface as the compiled kernel."""

from __future__ import annotations

import numpy as np

BACKEND = "python"
HALTED = 0
STUCK = 1
LIMIT = 2
GROW = 3


def run_standard(table, nsym, halt, tape, head, state, max_steps):
    t = list(table)
    hs = bytes(halt)
    n = len(tape)
    steps = 0
    status = LIMIT
    while steps < max_steps:
        if hs[state]:
            status = HALTED
            break
        base = (state * nsym + tape[head]) * 3
        nxt = t[base]
        if nxt < 0:
            status = STUCK
            break
        tape[head] = t[base + 1]
        head += t[base + 2]
        state = nxt
        steps += 1
        if head < 0 or head >= n:
            status = GROW
            break
    else:
        if hs[state]:
            status = HALTED
    return status, state, head, steps


def _count_in_blocks(words: np.ndarray, n: int) -> int:
    """Skip whole words whose walk cannot reach zero; expand only the rest."""
    nw = len(words)
    if nw == 0:
        return 0
    steps = 2 * np.bitwise_count(words).astype(np.int64) - 64
    if n % 64:
        # the last word only contributes its leading n % 64 bits
        tail = int(words[-1]) >> (64 - n % 64)
        steps[-1] = 2 * bin(tail).count("1") - n % 64
    start = np.zeros(nw, dtype=np.int64)
    np.cumsum(steps[:-1], out=start[1:])
    cand = np.flatnonzero(np.abs(start) <= 64)
    if cand.size == 0:
        return 0
    idx = np.stack([cand, cand + 1], axis=1)
    ok = idx < nw
    pair = np.where(ok, words[np.minimum(idx, nw - 1)], np.uint64(0))
    bits = np.unpackbits(np.ascontiguousarray(pair, dtype=">u8").view(np.uint8).reshape(len(cand), 16), axis=1)
    x = bits.astype(np.int8) * 2 - 1
    pos = cand[:, None] * 64 + np.arange(128)
    x[(pos >= n) | ~np.repeat(ok, 64, axis=1)] = 0
    s = np.cumsum(x, axis=1, dtype=np.int64) + start[cand][:, None]
    head = x[:, :64]
    hit = (s[:, :64] == 0) & (head != 0) & (head == x[:, 1:65])
    return int(hit.sum())


def sign_changes_words(words, n):
    return _count_in_blocks(np.asarray(words, dtype=np.uint64), int(n))


def seeded_sign_changes(seed, n):
    from .randomness import splitmix64_words

    return _count_in_blocks(splitmix64_words(int(seed), 0, (int(n) + 63) // 64), int(n))
