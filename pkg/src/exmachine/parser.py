"""Reader and writer for ``.exm`` machine files.

A file is a header followed by tuples in the usual parenthesized syntax::

    ;; comments run to end of line
    alphabet: E
    states: a b c h
    start: a
    halt: h
    (a, #, b, #, 1)
    (b, #, b, 0)                      ;; random: four fields
    (b, 0, |Q|, #, 1, (|Q|-1, #, b, #, 1))   ;; meta: nested tuple last

State tokens resolve as labels first and as bare naturals second.
"""

from __future__ import annotations

import re
from collections.abc import Sequence
from importlib import resources

from .core import BASE_ALPHABET
from .errors import ParseError, UniquenessViolation, UnknownSymbol
from .isa import Instruction, MachineDef, Meta, QRel, Random, Standard, StateRef, format_instruction, validate_uniqueness

_TOKEN = re.compile(r"\|Q\|\s*-\s*\d+|\|Q\||[^\s(),;]+|[(),]")
_QREL = re.compile(r"\|Q\|\s*(?:-\s*(\d+))?$")
_HEADERS = ("alphabet", "states", "start", "halt", "name")


def _strip_comment(line: str) -> tuple[str, str | None]:
    pos = line.find(";;")
    if pos < 0:
        return line, None
    return line[:pos], line[pos + 2 :].strip()


class _Tuples:
    """Tokenizer over the body that tracks line numbers."""

    def __init__(self, chunks: list[tuple[int, str]]):
        self.toks: list[tuple[int, str]] = []
        for lineno, text in chunks:
            for m in _TOKEN.finditer(text):
                self.toks.append((lineno, m.group()))
        self.pos = 0

    def peek(self) -> tuple[int, str] | None:
        return self.toks[self.pos] if self.pos < len(self.toks) else None

    def take(self) -> tuple[int, str]:
        tok = self.peek()
        if tok is None:
            last = self.toks[-1][0] if self.toks else None
            raise ParseError("unexpected end of input", last)
        self.pos += 1
        return tok

    def tuple_fields(self) -> tuple[int, list]:
        lineno, tok = self.take()
        if tok != "(":
            raise ParseError(f"expected '(' but found {tok!r}", lineno)
        fields: list = []
        while True:
            ln, tok = self.take()
            if tok == "(":
                self.pos -= 1
                fields.append(self.tuple_fields())
            elif tok in (",", ")"):
                raise ParseError(f"empty field before {tok!r}", ln)
            else:
                fields.append((ln, tok))
            ln, sep = self.take()
            if sep == ")":
                return lineno, fields
            if sep != ",":
                raise ParseError(f"expected ',' or ')' but found {sep!r}", ln)


class _Resolver:
    def __init__(self, names: Sequence[str], alphabet: Sequence[str]):
        self.index = {n: i for i, n in enumerate(names)}
        self.alphabet = set(alphabet)

    def state(self, field) -> StateRef:
        if isinstance(field[1], list):
            raise ParseError("nested tuple where a state was expected", field[0])
        ln, tok = field
        m = _QREL.match(tok)
        if m:
            return QRel(int(m.group(1) or 0))
        if tok in self.index:
            return self.index[tok]
        if tok.isdigit():
            return int(tok)
        raise ParseError(f"unknown state label {tok!r}", ln)

    def symbol(self, field) -> str:
        if isinstance(field[1], list):
            raise ParseError("nested tuple where a symbol was expected", field[0])
        ln, tok = field
        if tok not in self.alphabet:
            raise UnknownSymbol(f"symbol {tok!r} is not in the alphabet", ln)
        return tok

    def move(self, field) -> int:
        ln, tok = field
        if isinstance(tok, list) or tok not in ("-1", "0", "1", "+1"):
            raise ParseError(f"move must be -1, 0 or 1, got {tok!r}", ln)
        return int(tok)

    def instruction(self, lineno: int, fields: list, nested: bool = False) -> Instruction:
        n = len(fields)
        if n == 6 and not nested:
            inner = fields[5]
            if not isinstance(inner[1], list):
                raise ParseError("sixth field of a meta instruction must be a tuple", lineno)
            j = self.instruction(inner[0], inner[1], nested=True)
            return Meta(self.state(fields[0]), self.symbol(fields[1]), self.state(fields[2]),
                        self.symbol(fields[3]), self.move(fields[4]), j)
        if n == 5:
            return Standard(self.state(fields[0]), self.symbol(fields[1]), self.state(fields[2]),
                            self.symbol(fields[3]), self.move(fields[4]))
        if n == 4:
            return Random(self.state(fields[0]), self.symbol(fields[1]), self.state(fields[2]),
                          self.move(fields[3]))
        allowed = "4 or 5" if nested else "4, 5 or 6"
        raise ParseError(f"instruction has {n} fields; expected {allowed}", lineno)


def parse_machine(text: str) -> MachineDef:
    header: dict[str, tuple[int, list[str]]] = {}
    body: list[tuple[int, str]] = []
    comments: list[str] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line, comment = _strip_comment(raw)
        if comment is not None and not body and not line.strip():
            comments.append(comment)
        stripped = line.strip()
        if not stripped:
            continue
        key, sep, rest = stripped.partition(":")
        if sep and key.strip() in _HEADERS and not stripped.startswith("("):
            if body:
                raise ParseError(f"header {key.strip()!r} after the first instruction", lineno)
            header[key.strip()] = (lineno, rest.split())
            continue
        body.append((lineno, line))

    extras = [s for s in header.get("alphabet", (0, []))[1] if s not in BASE_ALPHABET]
    alphabet = BASE_ALPHABET + tuple(dict.fromkeys(extras))

    toks = _Tuples(body)
    raw_insts = []
    while toks.peek() is not None:
        raw_insts.append(toks.tuple_fields())

    if "states" in header:
        names = header["states"][1]
        if len(set(names)) != len(names):
            raise ParseError("duplicate state label", header["states"][0])
    else:
        names = [str(i) for i in range(_infer_state_count(raw_insts))]
    res = _Resolver(names, alphabet)
    insts = [res.instruction(ln, f) for ln, f in raw_insts]

    def one_state(key: str, default: list[str]) -> list[int]:
        ln, toks_ = header.get(key, (None, default))
        out = []
        for t in toks_:
            ref = res.state((ln, t))
            if isinstance(ref, QRel) or ref >= len(names):
                raise ParseError(f"{key} state {t!r} is not a declared state", ln)
            out.append(ref)
        return out

    start = one_state("start", ["0"])
    if len(start) != 1:
        raise ParseError("exactly one start state is required", header.get("start", (None,))[0])
    halts = one_state("halt", [])

    bad = validate_uniqueness(insts)
    if bad:
        a, b = bad[0]
        raise UniquenessViolation(
            f"{format_instruction(a, names)} and {format_instruction(b, names)} share state and symbol"
        )
    return MachineDef.build(
        insts, state_count=len(names), start=start[0], halt_states=halts,
        extras=alphabet[3:], state_names=names, comments=comments, check=False,
    )


def _infer_state_count(raw_insts) -> int:
    top = 0
    for _, fields in raw_insts:
        for f in fields[:3:2]:
            if f[1].isdigit():
                top = max(top, int(f[1]) + 1)
    return max(top, 1)


def serialize_machine(m: MachineDef, comments: Sequence[str] | None = None) -> str:
    lines = [f";; {c}" for c in (m.comments if comments is None else comments)]
    if m.extras:
        lines.append("alphabet: " + " ".join(m.extras))
    lines.append("states: " + " ".join(m.state_names))
    lines.append(f"start: {m.state_names[m.start]}")
    if m.halt_states:
        lines.append("halt: " + " ".join(m.state_names[h] for h in sorted(m.halt_states)))
    for inst in m.instructions:
        lines.append(format_instruction(inst, m.state_names))
    return "\n".join(lines) + "\n"


def load_machine(path: str) -> MachineDef:
    """Read a machine from ``path``, or from the bundled set when no such file exists."""
    import os

    if os.path.exists(path):
        with open(path, encoding="utf-8") as fh:
            return parse_machine(fh.read())
    name = os.path.basename(path)
    if not name.endswith(".exm"):
        name += ".exm"
    try:
        text = resources.files("exmachine.machines").joinpath(name).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise FileNotFoundError(f"no machine file {path!r} and no bundled machine {name!r}") from None
    return parse_machine(text)


def bundled_names() -> list[str]:
    return sorted(p.name for p in resources.files("exmachine.machines").iterdir() if p.name.endswith(".exm"))
