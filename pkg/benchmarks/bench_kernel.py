"""Compare the compiled kernel with the pure-Python fallback.

    python3 benchmarks/bench_kernel.py [--odd-max 101] [--steps 100000] [--walks 200] [--length 100000]

Each workload runs once per backend in this process; results are checked for
equality before timings are printed.
"""

from __future__ import annotations

import argparse
import time

from exmachine import _kernel_py, kernel
from exmachine.engine import compile_table
from exmachine.parser import load_machine
from exmachine.randomness import walk_seeds

try:
    from exmachine import _kernel as _compiled
except ImportError:
    _compiled = None


def collatz_workload(impl, odd_max: int, steps: int) -> list[tuple[int, int]]:
    m = load_machine("collatz")
    table, nsym, halt, syms, code = compile_table(m)
    out = []
    for n in range(1, odd_max + 1, 2):
        tape = bytearray(64) + bytearray([code["1"]] * n) + bytearray(64)
        status, *_, total, _ = kernel.run_table(table, nsym, halt, tape, 63, m.start, steps, impl=impl)
        out.append((status, total))
    return out


def band_workload(fn, walks: int, length: int) -> list[int]:
    return [fn(s, length) for s in walk_seeds(0x5EED, walks)]


def timed(f, *args):
    t0 = time.perf_counter()
    result = f(*args)
    return result, time.perf_counter() - t0


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--odd-max", type=int, default=101)
    p.add_argument("--steps", type=int, default=100_000)
    p.add_argument("--walks", type=int, default=200)
    p.add_argument("--length", type=int, default=100_000)
    args = p.parse_args()
    if _compiled is None:
        print("compiled kernel not built; only the fallback is available")
    backends = [("python", _kernel_py)] + ([("compiled", _compiled)] if _compiled else [])
    rows = []
    for label, workload, key in (
        (f"collatz odd n <= {args.odd_max}, {args.steps} steps", collatz_workload, "run_standard"),
        (f"sign changes, {args.walks} walks x {args.length} bits", band_workload, "seeded_sign_changes"),
    ):
        results = {}
        for name, mod in backends:
            extra = (args.odd_max, args.steps) if workload is collatz_workload else (args.walks, args.length)
            results[name] = timed(workload, getattr(mod, key), *extra)
        values = [r for r, _ in results.values()]
        assert all(v == values[0] for v in values), f"backends disagree on {label}"
        rows.append((label, {name: t for name, (_, t) in results.items()}))
    for label, times in rows:
        line = f"{label:<48}" + "".join(f"  {name} {t:8.3f} s" for name, t in times.items())
        if "compiled" in times:
            line += f"  speedup {times['python'] / times['compiled']:.1f}x"
        print(line)


if __name__ == "__main__":
    main()
