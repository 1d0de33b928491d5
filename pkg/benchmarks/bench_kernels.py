"""Compare the jitted alignment kernels against the pure-Python fallback.

Run from the repository root:

    python3 benchmarks/bench_kernels.py [--words N] [--repeats K]

Both implementations are called directly (the env flag only affects which
one the package aliases), so one process measures both.
"""

from __future__ import annotations

import argparse
import random
import statistics
import time

from vidtext._kernels import (
    alignment_fill_nb,
    alignment_fill_py,
    encode_words,
    pair_cost_matrix_nb,
    pair_cost_matrix_py,
)

_POOL = (
    "the quick brown fox jumps over lazy dog while birds sing songs about "
    "summer rain light there their to too two because through thought"
).split()


def _random_words(n: int, rng: random.Random) -> list[str]:
    return [rng.choice(_POOL) for _ in range(n)]


def _time(fn, *args, repeats: int) -> float:
    samples = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        samples.append(time.perf_counter() - t0)
    return statistics.median(samples)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--words", type=int, default=400, help="words per side")
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    if pair_cost_matrix_nb is None:
        raise SystemExit("numba is not importable; nothing to compare")

    rng = random.Random(1234)
    noisy = _random_words(args.words, rng)
    clean = _random_words(args.words, rng)
    a_flat, a_off = encode_words(noisy)
    b_flat, b_off = encode_words(clean)

    # First call pays the JIT compile; exclude it from timing.
    cost_warm = pair_cost_matrix_nb(a_flat, a_off, b_flat, b_off)
    alignment_fill_nb(cost_warm)

    t_cost_nb = _time(
        pair_cost_matrix_nb, a_flat, a_off, b_flat, b_off, repeats=args.repeats
    )
    t_cost_py = _time(
        pair_cost_matrix_py, a_flat, a_off, b_flat, b_off, repeats=args.repeats
    )
    cost = pair_cost_matrix_py(a_flat, a_off, b_flat, b_off)
    t_fill_nb = _time(alignment_fill_nb, cost, repeats=args.repeats)
    t_fill_py = _time(alignment_fill_py, cost, repeats=args.repeats)

    print(f"words per side: {args.words}, repeats: {args.repeats} (median)")
    print(
        f"pair_cost_matrix  numba {t_cost_nb * 1e3:9.2f} ms   "
        f"python {t_cost_py * 1e3:9.2f} ms   speedup {t_cost_py / t_cost_nb:7.1f}x"
    )
    print(
        f"alignment_fill    numba {t_fill_nb * 1e3:9.2f} ms   "
        f"python {t_fill_py * 1e3:9.2f} ms   speedup {t_fill_py / t_fill_nb:7.1f}x"
    )


if __name__ == "__main__":
    main()
