"""Bit sources and the statistical checks run against them.

Every backend hands out one bit per draw and counts draws. The seeded
backend is SplitMix64 with a fixed output convention: word ``i`` (from 0) is
``mix(seed + (i + 1) * GAMMA)`` and each word yields its 64 bits MSB-first.
That convention is permanent; golden streams in the tests pin it.
"""

from __future__ import annotations

import math
import os
import time
from abc import ABC, abstractmethod
from collections import deque
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import kernel
from .errors import BitsExhausted, ParseError, ProtocolError, RemoteUnreachable

GAMMA = 0x9E3779B97F4A7C15
_MASK = (1 << 64) - 1
_BLOCK_WORDS = 256


def splitmix64_words(seed: int, start: int, count: int) -> np.ndarray:
    """Words ``start .. start+count-1`` of the SplitMix64 stream for ``seed``."""
    idx = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(seed & _MASK) + idx * np.uint64(GAMMA)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return z ^ (z >> np.uint64(31))


def words_to_bits(words: np.ndarray) -> np.ndarray:
    return np.unpackbits(np.ascontiguousarray(words, dtype=">u8").view(np.uint8))


def seeded_bits(seed: int, n: int) -> np.ndarray:
    """First ``n`` bits of the seeded stream as a uint8 array."""
    return words_to_bits(splitmix64_words(seed, 0, (n + 63) // 64))[:n]


class BitSource(ABC):
    """Supplier of unbiased bits; ``bits_consumed`` counts successful draws."""

    def __init__(self) -> None:
        self.bits_consumed = 0

    def next_bit(self) -> int:
        b = self._draw()
        self.bits_consumed += 1
        return b

    def take(self, n: int) -> list[int]:
        return [self.next_bit() for _ in range(n)]

    @abstractmethod
    def _draw(self) -> int: ...

    def describe(self) -> str:
        return type(self).__name__


class SeededSource(BitSource):
    def __init__(self, seed: int):
        super().__init__()
        self.seed = seed & _MASK
        self._words_used = 0
        self._buf: np.ndarray = np.empty(0, dtype=np.uint8)
        self._pos = 0

    def _draw(self) -> int:
        if self._pos >= len(self._buf):
            words = splitmix64_words(self.seed, self._words_used, _BLOCK_WORDS)
            self._words_used += _BLOCK_WORDS
            self._buf = words_to_bits(words)
            self._pos = 0
        b = int(self._buf[self._pos])
        self._pos += 1
        return b

    def describe(self) -> str:
        return f"seed:{self.seed}"


class ReplaySource(BitSource):
    """Feeds a recorded sequence; running past its end raises :class:`BitsExhausted`."""

    def __init__(self, bits: Iterable[int] | str):
        super().__init__()
        if isinstance(bits, str):
            bits = parse_bit_string(bits)
        self.bits = tuple(int(b) for b in bits)
        if any(b not in (0, 1) for b in self.bits):
            raise ValueError("replay bits must be 0 or 1")
        self.cursor = 0

    def _draw(self) -> int:
        if self.cursor >= len(self.bits):
            raise BitsExhausted(f"replay source exhausted after {len(self.bits)} bits")
        b = self.bits[self.cursor]
        self.cursor += 1
        return b

    @property
    def remaining(self) -> int:
        return len(self.bits) - self.cursor

    def describe(self) -> str:
        return "replay:" + "".join(map(str, self.bits))


class OsEntropySource(BitSource):
    def __init__(self) -> None:
        super().__init__()
        self._buf: deque[int] = deque()

    def _draw(self) -> int:
        if not self._buf:
            self._buf.extend(int(b) for b in np.unpackbits(np.frombuffer(os.urandom(64), dtype=np.uint8)))
        return self._buf.popleft()

    def describe(self) -> str:
        return "os"


# ---------------------------------------------------------------- remote QRNG

@dataclass
class QrngClient:
    """HTTP client for a byte-oriented QRNG service.

    The endpoint is queried with ``?length=<bytes>&type=uint8`` and must answer
    with a JSON array of integers in 0..255, or an object holding such an
    array under ``"data"``. The token, if any, goes in ``x-api-key``.
    """

    url: str
    token: str | None = None
    retries: int = 3
    backoff: float = 0.5
    timeout: float = 10.0
    max_bytes: int = 1024
    transport: object | None = None
    _buffer: deque = field(default_factory=deque, repr=False)

    @classmethod
    def from_env(cls, **kw) -> QrngClient:
        url = os.environ.get("EXM_QRNG_URL")
        if not url:
            raise RemoteUnreachable("EXM_QRNG_URL is not set")
        return cls(url=url, token=os.environ.get("EXM_QRNG_TOKEN"), **kw)

    def _get_bytes(self, count: int) -> list[int]:
        import httpx

        headers = {"x-api-key": self.token} if self.token else {}
        params = {"length": str(count), "type": "uint8"}
        last = "no attempt made"
        attempts = max(1, self.retries)
        with httpx.Client(transport=self.transport, timeout=self.timeout) as http:
            for attempt in range(attempts):
                if attempt and self.backoff > 0:
                    time.sleep(self.backoff * 2 ** (attempt - 1))
                try:
                    resp = http.get(self.url, params=params, headers=headers)
                except httpx.HTTPError as exc:
                    last = f"{type(exc).__name__}: {exc}"
                    continue
                if resp.status_code in (401, 403):
                    raise RemoteUnreachable(f"QRNG rejected credentials (HTTP {resp.status_code})")
                if resp.status_code >= 400:
                    last = f"HTTP {resp.status_code}"
                    continue
                return decode_payload(resp.content)
        raise RemoteUnreachable(f"QRNG unreachable after {attempts} attempts ({last})")


def decode_payload(content: bytes) -> list[int]:
    import json

    try:
        payload = json.loads(content)
    except ValueError as exc:
        raise ProtocolError(f"QRNG payload is not JSON: {exc}") from None
    if isinstance(payload, dict):
        if payload.get("success") is False:
            raise ProtocolError(f"QRNG reported failure: {payload.get('message', payload)}")
        payload = payload.get("data")
    if not isinstance(payload, list) or not payload:
        raise ProtocolError("QRNG payload must be a non-empty array of bytes")
    for v in payload:
        if isinstance(v, bool) or not isinstance(v, int) or not 0 <= v <= 255:
            raise ProtocolError(f"QRNG payload value {v!r} is not a byte")
    return payload


def fetch_remote_bits(client: QrngClient, n: int) -> list[int]:
    """Return exactly ``n`` bits, keeping any surplus buffered in ``client``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    buf = client._buffer
    while len(buf) < n:
        need = min(client.max_bytes, math.ceil((n - len(buf)) / 8))
        for byte in client._get_bytes(need):
            buf.extend((byte >> (7 - k)) & 1 for k in range(8))
    return [buf.popleft() for _ in range(n)]


class RemoteSource(BitSource):
    def __init__(self, client: QrngClient, chunk: int = 256):
        super().__init__()
        self.client = client
        self.chunk = chunk
        self._local: deque[int] = deque()

    def _draw(self) -> int:
        if not self._local:
            self._local.extend(fetch_remote_bits(self.client, self.chunk))
        return self._local.popleft()

    def describe(self) -> str:
        return "qrng"


def next_bit(source: BitSource) -> int:
    return source.next_bit()


# ---------------------------------------------------------------- bit files

def parse_bit_string(text: str) -> list[int]:
    out = []
    for ch in text:
        if ch in "01":
            out.append(int(ch))
        elif not ch.isspace():
            raise ParseError(f"bit data may only contain 0, 1 and whitespace, found {ch!r}")
    return out


def read_bits_file(path: str) -> list[int]:
    with open(path, encoding="ascii") as fh:
        return parse_bit_string(fh.read())


def make_source(bit_spec: str) -> BitSource:
    """Build a source from ``seed:N``, ``file:PATH``, ``os`` or ``qrng``."""
    kind, _, arg = bit_spec.partition(":")
    if kind == "seed" and arg:
        return SeededSource(int(arg, 0))
    if kind == "file" and arg:
        return ReplaySource(read_bits_file(arg))
    if kind == "os" and not arg:
        return OsEntropySource()
    if kind == "qrng" and not arg:
        return RemoteSource(QrngClient.from_env())
    raise ValueError(f"bad bit source {bit_spec!r}; expected seed:N, file:PATH, os or qrng")


# ---------------------------------------------------------------- statistics

def _as_bit_array(bits: Sequence[int] | np.ndarray | str) -> np.ndarray:
    if isinstance(bits, str):
        bits = parse_bit_string(bits)
    arr = np.asarray(bits, dtype=np.uint8)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("need a non-empty bit sequence")
    if arr.max() > 1:
        raise ValueError("bits must be 0 or 1")
    return arr


def monobit_frequency(bits) -> Fraction:
    arr = _as_bit_array(bits)
    return Fraction(int(arr.sum(dtype=np.int64)), arr.size)


def pack_words(arr: np.ndarray) -> np.ndarray:
    packed = np.packbits(arr)
    pad = (-packed.size) % 8
    if pad:
        packed = np.concatenate([packed, np.zeros(pad, dtype=np.uint8)])
    return packed.view(">u8").astype(np.uint64)


def sign_change_count(bits) -> int:
    """Sign changes of the walk S_k = sum of (2 b_i - 1).

    A change happens at k when S_k = 0 and S_{k-1}, S_{k+1} have opposite
    signs, i.e. the walk passes through zero rather than touching it.
    """
    arr = _as_bit_array(bits)
    return kernel.sign_changes_words(pack_words(arr), arr.size)


@dataclass(frozen=True)
class SignChangeBand:
    length: int
    walks: int
    level: float
    low: float
    high: float
    mean: float

    def contains(self, count: int) -> bool:
        return self.low <= count <= self.high


def walk_seeds(master_seed: int, walks: int) -> list[int]:
    return [int(w) for w in splitmix64_words(master_seed, 0, walks)]


def sign_change_band(length: int, walks: int = 1000, level: float = 0.99, master_seed: int = 0x5EED) -> SignChangeBand:
    """Central ``level`` band of sign-change counts over seeded walks of ``length`` bits."""
    counts = np.array([kernel.seeded_sign_changes(s, length) for s in walk_seeds(master_seed, walks)])
    tail = (1.0 - level) / 2
    low, high = np.quantile(counts, [tail, 1.0 - tail])
    return SignChangeBand(length, walks, level, float(low), float(high), float(counts.mean()))


def alternating_bits(n: int) -> np.ndarray:
    return np.resize(np.array([0, 1], dtype=np.uint8), n)
