"""Benchmark the two expression-evaluation kernels.

Runs each compiled-tape kernel (numba and numpy) over large point arrays
and over an end-to-end verification, printing a timing table::

    python3 benchmarks/bench_backends.py [--size N] [--repeats K]

The numba kernel needs a one-time JIT compile; the first call is excluded
by a warm-up pass. Set ODEFORM_NUMBA=numpy to check what the fallback
path costs in production use.
"""

import argparse
import time

import numpy as np

from odeform import (
    EquationSpec,
    InitialCondition,
    available_backends,
    full_verify,
    get_backend,
    parse,
    set_backend,
)

EXPRESSIONS = [
    "x^2",
    "exp(-x)",
    "sin(x)+2*x^2",
    "1/(1+x^2)",
    "exp(-x^2)*cos(3*x)+atan(x)/(2+sin(x))",
]


def best_of(repeats, fn):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_tape_eval(size, repeats):
    xs = np.linspace(-3.0, 3.0, size)
    print(f"\ntape evaluation over {size:,} points (best of {repeats}):")
    print(f"{'expression':<42}{'numba':>12}{'numpy':>12}{'ratio':>9}")
    for text in EXPRESSIONS:
        expr = parse(text)
        timings = {}
        for backend in available_backends():
            set_backend(backend)
            expr.eval_many(xs[:16])  # warm-up / JIT compile
            timings[backend] = best_of(repeats, lambda: expr.eval_many(xs))
        ratio = timings["numpy"] / timings["numba"] \
            if "numba" in timings else float("nan")
        print(f"{text:<42}"
              f"{timings.get('numba', float('nan')) * 1e3:>10.2f}ms"
              f"{timings['numpy'] * 1e3:>10.2f}ms"
              f"{ratio:>8.2f}x")


def bench_full_verify(repeats):
    spec = EquationSpec.linear(parse("sin(x)"), parse("cos(x)"))
    start = InitialCondition(0.0, 1.0)
    print(f"\nend-to-end verification of one linear instance "
          f"(best of {repeats}):")
    for backend in available_backends():
        set_backend(backend)
        t = best_of(repeats,
                    lambda: full_verify(spec, start, (0.0, 2.0)))
        print(f"  {backend:<8}{t * 1e3:>10.1f}ms")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=1_000_000,
                    help="number of evaluation points (default 1e6)")
    ap.add_argument("--repeats", type=int, default=5,
                    help="timing repeats, best is reported (default 5)")
    args = ap.parse_args()

    saved = get_backend()
    print(f"available backends: {', '.join(available_backends())}")
    try:
        bench_tape_eval(args.size, args.repeats)
        bench_full_verify(max(2, args.repeats // 2))
    finally:
        set_backend(saved)


if __name__ == "__main__":
    main()
