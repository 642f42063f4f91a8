"""Compare the compiled and numpy kernel backends.

    python3 benchmarks/bench_kernels.py [--n 65536] [--repeat 5]

Prints best-of-``repeat`` wall time per kernel and backend, the speedup, and
whether both backends produced identical output.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from neurocrypt.ciphers.des import DesReducedOracle
from neurocrypt.ciphers.hitag2 import filter_ints, step_ints
from neurocrypt.kernels import backends


def best_time(fn, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--n", type=int, default=1 << 16)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(0)
    blocks = rng.integers(0, 2**63, size=args.n, dtype=np.uint64) * np.uint64(2) + rng.integers(0, 2, args.n, dtype=np.uint64)
    states = rng.integers(0, 2**48, size=args.n, dtype=np.uint64)
    des1, des3 = DesReducedOracle(rounds=1), DesReducedOracle(rounds=3)

    cases = {
        "des 1 round": lambda b: des1.encrypt_ints(blocks, b),
        "des 3 rounds": lambda b: des3.encrypt_ints(blocks, b),
        "hitag2 filter": lambda b: filter_ints(states, b),
        "hitag2 step": lambda b: step_ints(states, b),
    }
    impls = backends()
    print(f"{args.n} inputs, best of {args.repeat}; backends: {', '.join(impls)}")
    print(f"{'kernel':<16}" + "".join(f"{name + ' ms':>14}" for name in impls) + f"{'speedup':>10}  agree")
    for label, fn in cases.items():
        times, outs = {}, {}
        for name, impl in impls.items():
            times[name], outs[name] = best_time(lambda: fn(impl), args.repeat)
        agree = all(np.array_equal(outs["numpy"], o) for o in outs.values())
        speed = times["numpy"] / times["cython"] if "cython" in times else float("nan")
        print(f"{label:<16}" + "".join(f"{1e3 * times[n]:>14.2f}" for n in impls) + f"{speed:>9.1f}x  {agree}")


if __name__ == "__main__":
    main()
