"""Command line entry point: ``exmachine <command> ...``.

Exit codes: 0 ok, 1 failed check, 2 usage, 3 parse, 4 stuck,
5 bits exhausted, 6 step limit, 7 protocol, 8 remote, 9 machine error.
"""

from __future__ import annotations

import argparse
import json
import sys
from collections.abc import Sequence

from . import engine, haltinglab, phimap, qxfamily, randomness
from .engine import Outcome
from .errors import ExMachineError
from .isa import Meta, Random
from .parser import load_machine, serialize_machine

EXIT_FOR_OUTCOME = {
    Outcome.HALTED: 0,
    Outcome.STUCK: 4,
    Outcome.BITS_EXHAUSTED: 5,
    Outcome.STEP_LIMIT: 6,
}
ERROR_FOR_OUTCOME = {
    Outcome.STUCK: "MachineStuck",
    Outcome.BITS_EXHAUSTED: "BitsExhausted",
    Outcome.STEP_LIMIT: "StepLimitExceeded",
}


class UsageError(ExMachineError):
    exit_code = 2


def _uses_randomness(machine) -> bool:
    return any(isinstance(i, Random) or (isinstance(i, Meta) and isinstance(i.j, Random))
               for i in machine.instructions)


def _write(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _emit_trace(records, fmt: str) -> None:
    if fmt == "json":
        sys.stdout.write(engine.format_trace_json(records))
    else:
        sys.stdout.write(engine.format_trace_text(records))


def cmd_run(args) -> int:
    machine = load_machine(args.machine)
    needs_bits = _uses_randomness(machine)
    if needs_bits and not args.bits:
        raise UsageError("this machine has random instructions; pass --bits seed:N|file:PATH|os|qrng")
    if args.bits and not needs_bits:
        raise UsageError("--bits given but the machine has no random instructions")
    source = randomness.make_source(args.bits) if args.bits else None
    tracing = args.trace or args.trace_format != "text"
    res = engine.run(machine, args.tape, source, max_steps=args.max_steps, trace=tracing, pad=args.pad)
    if tracing:
        _emit_trace(res.trace, args.trace_format)
    out = res.outcome
    label = res.machine.state_names[out.state] if out.state < res.machine.state_count else str(out.state)
    rep = res.report
    summary = (f"{out.kind.value}: state {label}, head {res.head}, scanning {res.scanned!r}; "
               f"{rep.steps} steps, {rep.bits_consumed} bits, |Q| = {rep.final_state_count}, "
               f"{rep.final_instruction_count} instructions")
    if args.trace_format == "json":
        print(json.dumps({"outcome": out.kind.value, "state": label, "head": res.head,
                          "scanned": res.scanned, **rep.__dict__}))
    else:
        print(summary)
    if args.save_evolved:
        _write(args.save_evolved, serialize_machine(res.machine))
    if out.kind in ERROR_FOR_OUTCOME:
        print(f"error: {ERROR_FOR_OUTCOME[out.kind]}: {out.detail or summary}", file=sys.stderr)
    return EXIT_FOR_OUTCOME[out.kind]


def cmd_membership(args) -> int:
    machine = load_machine(args.machine)
    source = randomness.make_source(args.bits) if args.bits else None
    verdict, res = qxfamily.membership(machine, args.n, source, max_steps=args.max_steps, trace=args.trace)
    if args.trace:
        _emit_trace(res.trace, "text")
    print(verdict.symbol)
    print(f"bits used: {verdict.bits_used}")
    if args.save_evolved:
        _write(args.save_evolved, serialize_machine(verdict.machine))
    return 0


def cmd_build_qx(args) -> int:
    bits = "" if args.bits in ("-", "x", "") else args.bits
    text = serialize_machine(qxfamily.build_qx(bits))
    if args.output:
        _write(args.output, text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_psi(args) -> int:
    print(qxfamily.psi(args.n))
    return 0


def cmd_psi_inv(args) -> int:
    bits = "" if args.bits in ("-", "") else args.bits
    print(qxfamily.psi_inv(bits))
    return 0


def cmd_collatz_survey(args) -> int:
    rows = haltinglab.collatz_survey(args.odd_max, args.max_steps)
    if args.json:
        print(json.dumps([r.to_dict() for r in rows]))
    else:
        print(f"{'n':>5}  {'verdict':<8} {'steps':>10}  orbit")
        for r in rows:
            print(f"{r.n:>5}  {r.verdict.value:<8} {r.steps:>10}  {r.orbit_length}")
        unknown = [r.n for r in rows if r.verdict is haltinglab.Verdict.UNKNOWN]
        print(f"{len(rows) - len(unknown)} of {len(rows)} halted within {args.max_steps} steps")
    return 0


def cmd_halting_lab(args) -> int:
    alphabet = ("0", "1", "#") + tuple(args.extra_symbols or ())
    result = haltinglab.guided_evolution(args.m, args.max_states, alphabet, args.oracle_steps,
                                         translated=not args.exact_only)
    prefix = "".join(map(str, result.bits))
    for row in result.rows:
        cert = row.verdict.certificate
        extra = f" {cert.kind} ({cert.i}, {cert.j})" if cert else ""
        print(f"{row.index:>4}  {row.verdict.kind.value:<8} steps {row.verdict.steps}{extra}")
    print(f"prefix {prefix}; evolved machine has {result.machine.state_count} states")
    if args.output:
        _write(args.output, serialize_machine(result.machine))
    if args.report:
        _write(args.report, json.dumps({
            "m": args.m, "max_states": args.max_states, "oracle_steps": args.oracle_steps,
            "bits": result.bits,
            "rows": [{"index": r.index, "initial": r.initial, "verdict": r.verdict.kind.value,
                      "steps": r.verdict.steps,
                      "certificate": None if r.verdict.certificate is None else r.verdict.certificate.__dict__}
                     for r in result.rows],
        }, indent=2) + "\n")
    return 0


def cmd_phi_check(args) -> int:
    machine = load_machine(args.machine)
    rep = phimap.verify_correspondence(machine, args.tape, args.steps)
    sys.stdout.write(rep.to_json() + "\n" if args.report == "json" else rep.to_text())
    return 0 if rep.ok else 1


def cmd_bits_test(args) -> int:
    source = randomness.make_source(args.bits)
    bits = source.take(args.n) if not isinstance(source, randomness.SeededSource) else \
        randomness.seeded_bits(source.seed, args.n)
    freq = randomness.monobit_frequency(bits)
    count = randomness.sign_change_count(bits)
    band = randomness.sign_change_band(args.n, walks=args.walks)
    mono_ok = abs(float(freq) - 0.5) <= args.tolerance
    sign_ok = band.contains(count)
    print(f"monobit frequency  {float(freq):.5f}  {'pass' if mono_ok else 'FAIL'}")
    print(f"sign changes       {count}  band [{band.low:g}, {band.high:g}] "
          f"from {band.walks} walks  {'pass' if sign_ok else 'FAIL'}")
    return 0 if mono_ok and sign_ok else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="exmachine", description="Run and study ex-machines.",
        epilog="exit codes: 0 ok, 1 failed check, 2 usage, 3 parse, 4 stuck, 5 bits exhausted, "
               "6 step limit or undecided, 7 protocol, 8 remote, 9 machine error")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="execute a machine")
    r.add_argument("machine", help=".exm file or bundled name (collatz, randomwalk, qx, example22)")
    r.add_argument("--tape", default="# ##", help='tape literal, e.g. "# #11111#"')
    r.add_argument("--bits", help="seed:N | file:PATH | os | qrng")
    r.add_argument("--max-steps", type=int, default=engine.DEFAULT_MAX_STEPS)
    r.add_argument("--trace", action="store_true", help="print the execution trace")
    r.add_argument("--trace-format", choices=("text", "json"), default="text")
    r.add_argument("--pad", type=int, default=2, help="blank squares shown around the tape")
    r.add_argument("--save-evolved", metavar="PATH")
    r.set_defaults(func=cmd_run)

    m = sub.add_parser("membership", help="ask a Q-family machine whether a^n is in its language")
    m.add_argument("machine")
    m.add_argument("--n", type=int, required=True)
    m.add_argument("--bits", help="seed:N | file:PATH | os | qrng")
    m.add_argument("--max-steps", type=int, default=engine.DEFAULT_MAX_STEPS)
    m.add_argument("--trace", action="store_true")
    m.add_argument("--save-evolved", metavar="PATH")
    m.set_defaults(func=cmd_membership)

    b = sub.add_parser("build-qx", help="write Q(a0 ... am x); use - for Q(x)")
    b.add_argument("bits")
    b.add_argument("-o", "--output")
    b.set_defaults(func=cmd_build_qx)

    s = sub.add_parser("psi", help="binary string paired with a^n")
    s.add_argument("n", type=int)
    s.set_defaults(func=cmd_psi)
    s = sub.add_parser("psi-inv", help="n such that psi(n) is the given string; - for empty")
    s.add_argument("bits")
    s.set_defaults(func=cmd_psi_inv)

    c = sub.add_parser("collatz-survey", help="run the Collatz machine on odd n")
    c.add_argument("--odd-max", type=int, default=101)
    c.add_argument("--max-steps", type=int, default=100_000)
    c.add_argument("--json", action="store_true")
    c.set_defaults(func=cmd_collatz_survey)

    h = sub.add_parser("halting-lab", help="evolve Q(x) along bounded halting-oracle bits")
    h.add_argument("--m", type=int, default=8)
    h.add_argument("--max-states", type=int, default=1)
    h.add_argument("--extra-symbols", nargs="*")
    h.add_argument("--oracle-steps", type=int, default=1000)
    h.add_argument("--exact-only", action="store_true", help="certify immortality by exact repeats only")
    h.add_argument("-o", "--output")
    h.add_argument("--report")
    h.set_defaults(func=cmd_halting_lab)

    f = sub.add_parser("phi-check", help="check the affine orbit against execution")
    f.add_argument("machine")
    f.add_argument("--tape", default="# ##")
    f.add_argument("--steps", type=int, default=1000)
    f.add_argument("--report", choices=("text", "json"), default="text")
    f.set_defaults(func=cmd_phi_check)

    t = sub.add_parser("bits-test", help="monobit and sign-change checks on a bit source")
    t.add_argument("--bits", required=True)
    t.add_argument("--n", type=int, default=100_000)
    t.add_argument("--walks", type=int, default=1000)
    t.add_argument("--tolerance", type=float, default=0.01)
    t.set_defaults(func=cmd_bits_test)
    for sp in sub.choices.values():
        sp.set_defaults(subparser=sp)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        args.subparser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except ExMachineError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
