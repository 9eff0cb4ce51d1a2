"""Compare the compiled edit-distance kernel with the pure-Python one.

Run from the repository root:

    python3 benchmarks/bench_editdist.py

Both backends compute true Damerau-Levenshtein distance; the benchmark
checks they agree on every sampled pair, then times them on workloads like
the ones the platform actually runs (short CV-CV word pairs for signal-set
generation, plus longer strings to show scaling).
"""

import random
import statistics
import time

from colexgame._editdist_py import damerau_levenshtein as pure_dl
from colexgame.editdist import BACKEND, damerau_levenshtein as active_dl


def sample_words(rng, n, min_len, max_len, alphabet="abcdefghijklmnop"):
    return [
        "".join(rng.choice(alphabet) for _ in range(rng.randrange(min_len, max_len + 1)))
        for _ in range(n)
    ]


def time_backend(fn, pairs, repeats=5):
    timings = []
    for _ in range(repeats):
        start = time.perf_counter()
        for a, b in pairs:
            fn(a, b)
        timings.append(time.perf_counter() - start)
    return min(timings), statistics.median(timings)


def main():
    rng = random.Random(1234)
    workloads = {
        "signal words (4 chars)": [
            (a, b)
            for a, b in zip(
                sample_words(rng, 20_000, 4, 4),
                sample_words(rng, 20_000, 4, 4),
            )
        ],
        "short words (1-8 chars)": [
            (a, b)
            for a, b in zip(
                sample_words(rng, 20_000, 1, 8),
                sample_words(rng, 20_000, 1, 8),
            )
        ],
        "long strings (40-60 chars)": [
            (a, b)
            for a, b in zip(
                sample_words(rng, 2_000, 40, 60),
                sample_words(rng, 2_000, 40, 60),
            )
        ],
    }

    print(f"active backend: {BACKEND}")
    if BACKEND != "c":
        print("compiled extension not built; timing the pure kernel only")

    for name, pairs in workloads.items():
        mismatches = sum(
            1 for a, b in pairs[:2000] if active_dl(a, b) != pure_dl(a, b)
        )
        if mismatches:
            raise SystemExit(f"{name}: backends disagree on {mismatches} pairs")
        best_active, _ = time_backend(active_dl, pairs)
        best_pure, _ = time_backend(pure_dl, pairs)
        rate_active = len(pairs) / best_active
        rate_pure = len(pairs) / best_pure
        speedup = best_pure / best_active
        print(
            f"{name}: {len(pairs)} pairs | "
            f"active {best_active * 1e3:7.1f} ms ({rate_active:,.0f}/s) | "
            f"pure {best_pure * 1e3:7.1f} ms ({rate_pure:,.0f}/s) | "
            f"speedup x{speedup:.1f}"
        )


if __name__ == "__main__":
    main()
