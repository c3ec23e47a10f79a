# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops: dense-table Turing machine stepping and walk statistics."""

from libc.stdint cimport int32_t, int64_t, uint8_t, uint64_t

cdef extern from *:
    int popcount64 "__builtin_popcountll"(unsigned long long x) nogil

cdef enum Status:
    S_HALTED = 0
    S_STUCK = 1
    S_LIMIT = 2
    S_GROW = 3

BACKEND = "compiled"
HALTED = S_HALTED
STUCK = S_STUCK
LIMIT = S_LIMIT
GROW = S_GROW


def run_standard(const int32_t[::1] table, int nsym, const uint8_t[::1] halt,
                 uint8_t[::1] tape, int64_t head, int state, int64_t max_steps):
    """Step a standard machine until halt, stuck, budget or tape edge.

    ``table[(state*nsym + sym)*3 : +3]`` holds (next, write, move); next < 0
    marks an undefined pair. Returns (status, state, head, steps).
    """
    cdef int64_t steps = 0
    cdef int64_t n = tape.shape[0]
    cdef int64_t base
    cdef int nxt
    cdef int status = S_LIMIT
    with nogil:
        while steps < max_steps:
            if halt[state]:
                status = S_HALTED
                break
            base = (<int64_t>state * nsym + tape[head]) * 3
            nxt = table[base]
            if nxt < 0:
                status = S_STUCK
                break
            tape[head] = <uint8_t>table[base + 1]
            head += table[base + 2]
            state = nxt
            steps += 1
            if head < 0 or head >= n:
                status = S_GROW
                break
        else:
            if halt[state]:
                status = S_HALTED
    return status, state, head, steps


cdef inline uint64_t _mix(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EB
    return z ^ (z >> 31)


cdef inline void _walk(uint64_t w, int nb, int64_t* s, int* pending, int64_t* count) noexcept nogil:
    # w holds nb valid bits in its low end, most significant first
    cdef int k, x
    cdef int64_t a = s[0] if s[0] >= 0 else -s[0]
    if a > nb:
        s[0] += 2 * popcount64(w) - nb
        return
    for k in range(nb - 1, -1, -1):
        x = 1 if (w >> k) & 1 else -1
        if pending[0] != 0:
            if x == pending[0]:
                count[0] += 1
            pending[0] = 0
        s[0] += x
        if s[0] == 0:
            pending[0] = x


def sign_changes_words(const uint64_t[::1] words, int64_t n):
    cdef int64_t s = 0, count = 0, i, nwords = (n + 63) // 64
    cdef int pending = 0, nb
    cdef uint64_t w
    with nogil:
        for i in range(nwords):
            nb = 64 if n - 64 * i >= 64 else <int>(n - 64 * i)
            w = words[i] if nb == 64 else words[i] >> (64 - nb)
            _walk(w, nb, &s, &pending, &count)
    return count


def seeded_sign_changes(uint64_t seed, int64_t n):
    cdef int64_t s = 0, count = 0, i, nwords = (n + 63) // 64
    cdef int pending = 0, nb
    cdef uint64_t w
    with nogil:
        for i in range(nwords):
            w = _mix(seed + <uint64_t>(i + 1) * <uint64_t>0x9E3779B97F4A7C15ULL)
            nb = 64 if n - 64 * i >= 64 else <int>(n - 64 * i)
            if nb < 64:
                w = w >> (64 - nb)
            _walk(w, nb, &s, &pending, &count)
    return count
