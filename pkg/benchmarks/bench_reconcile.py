"""Compare the compiled and pure-Python BCH kernels.

The two backends share one contract (see loraskg._kernels), so both can
be imported side by side and timed on identical workloads: syndrome
computation over random blocks and syndrome decoding at error weights
up to each code's capability.

    python3 benchmarks/bench_reconcile.py [--trials N]
"""

import argparse
import time

import numpy as np

from loraskg._kernels import gf2bch as py_backend
from loraskg.reconcile import default_codes

try:
    from loraskg._kernels import _gf2bch_cy as cy_backend
except ImportError:
    cy_backend = None


def time_per_call(fn, args_list):
    start = time.perf_counter()
    for args in args_list:
        fn(*args)
    return (time.perf_counter() - start) / len(args_list)


def bench_code(code, trials, rng):
    blocks = [rng.integers(0, 2, code.n).astype(np.uint8) for _ in range(trials)]
    syndromes = []
    for block in blocks:
        e = block.copy()
        w = int(rng.integers(0, code.t + 1))
        if w:
            e[rng.choice(code.n, size=w, replace=False)] ^= 1
        syndromes.append(code.syndrome(block ^ e))

    gen = code.generator
    exp, log = code._exp, code._log
    rows = []
    backends = [("python", py_backend)] + (
        [("compiled", cy_backend)] if cy_backend is not None else []
    )
    for name, backend in backends:
        syn_us = time_per_call(
            backend.syndrome_remainder, [(b, gen) for b in blocks]
        ) * 1e6
        dec_us = time_per_call(
            backend.decode_syndrome, [(s, code.n, code.t, exp, log) for s in syndromes]
        ) * 1e6
        rows.append((name, syn_us, dec_us))
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--trials", type=int, default=300, help="operations per cell")
    args = parser.parse_args()

    if cy_backend is None:
        print("compiled backend not built; timing the pure-Python kernels only\n")

    rng = np.random.default_rng(0)
    header = f"{'code':<16} {'backend':<9} {'syndrome us':>12} {'decode us':>10}"
    print(header)
    print("-" * len(header))
    speedups = []
    for code in default_codes():
        rows = bench_code(code, args.trials, rng)
        for name, syn_us, dec_us in rows:
            print(f"{code.code_id:<16} {name:<9} {syn_us:>12.1f} {dec_us:>10.1f}")
        if len(rows) == 2:
            (_, psyn, pdec), (_, csyn, cdec) = rows
            speedups.append((code.code_id, psyn / csyn, pdec / cdec))
    if speedups:
        print()
        for code_id, s_syn, s_dec in speedups:
            print(f"{code_id}: compiled speedup {s_syn:.1f}x syndrome, {s_dec:.1f}x decode")


if __name__ == "__main__":
    main()
