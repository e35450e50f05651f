"""Compare the numba kernels with their numpy fallbacks on simulated streams.

Usage: python3 benchmarks/bench_kernels.py [--pairs 1000000] [--repeat 5]

Both paths are called explicitly through the ``use_numba`` switch, so the
``UNARYCM_NO_NUMBA`` flag does not matter here.  Results are checked for
equality before timing.
"""

import argparse
import time

import numpy as np

from unarycm import _kernels as K
from unarycm.coincidence_sim import SimConfig, generate


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--pairs", type=int, default=1_000_000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--rate", type=float, default=2e5, help="pair rate; higher rates stress dead time")
    args = ap.parse_args()

    if not K.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    a, b = generate(SimConfig(n_pairs=args.pairs, pair_rate=args.rate, seed=1))
    ta, tb = a.t_ns.astype(np.int64), b.t_ns.astype(np.int64)
    raw_t = np.sort(np.concatenate([ta, tb + 7]))
    raw_d = np.where(np.arange(len(raw_t)) % 3 == 0, 2, 1).astype(np.uint8)
    ci, cj = K.candidate_pairs(ta, tb, 4.0)
    keys = np.arange(len(ta), dtype=np.uint64)

    cases = {
        "splitmix64": lambda nb: K.splitmix64(keys, use_numba=nb),
        "dead_time_mask": lambda nb: K.dead_time_mask(raw_t, raw_d, 1000, use_numba=nb),
        "candidate_pairs": lambda nb: K.candidate_pairs(ta, tb, 4.0, use_numba=nb),
        "greedy_accept": lambda nb: K.greedy_accept(ci, cj, len(ta), len(tb), use_numba=nb),
    }
    sizes = {"splitmix64": len(keys), "dead_time_mask": len(raw_t), "candidate_pairs": len(ta), "greedy_accept": len(ci)}
    print(f"{'kernel':<16} {'n':>9} {'numpy [ms]':>11} {'numba [ms]':>11} {'speedup':>8}")
    for name, fn in cases.items():
        r_np, r_nb = fn(False), fn(True)  # also warms up the JIT
        same = all(np.array_equal(x, y) for x, y in zip(r_np, r_nb)) if isinstance(r_np, tuple) else np.array_equal(r_np, r_nb)
        if not same:
            raise SystemExit(f"{name}: numba and numpy results differ")
        t_np = best_of(lambda: fn(False), args.repeat)
        t_nb = best_of(lambda: fn(True), args.repeat)
        print(f"{name:<16} {sizes[name]:>9} {t_np * 1e3:>11.2f} {t_nb * 1e3:>11.2f} {t_np / t_nb:>7.1f}x")


if __name__ == "__main__":
    main()
