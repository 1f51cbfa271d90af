#!/usr/bin/env python3
"""Benchmark the compiled feature/SGD kernel against the pure-Python fallback.

Runs the three hot operations (featurization, one SGD epoch, batch scoring)
on synthetic text with both backends and reports wall times and speedups.
The two backends are bit-identical; this script only measures speed.

Usage:
    python3 benchmarks/bench_kernel.py [--sentences 4000] [--repeats 3]
"""

import argparse
import sys
import time

import numpy as np

from prosub import _kernel_py
from prosub.seeding import substream

try:
    from prosub import _kernel
except ImportError:
    _kernel = None

_VOCAB = (
    "the a cat dog bird fish boat tree saw liked found chased it did so "
    "of for in this that there way big red old small green near under with"
).split()


def make_corpus(n_sentences: int, seed: int) -> list[list[str]]:
    rng = substream(seed, "bench")
    return [
        [rng.choice(_VOCAB) for _ in range(rng.randrange(5, 25))]
        for _ in range(n_sentences)
    ]


def bench_backend(mod, corpus, hash_dim: int, repeats: int) -> dict[str, float]:
    mask = hash_dim - 1
    timings = {}

    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        indptr, indices, counts = mod.featurize_all(corpus, 1, 3, mask)
        best = min(best, time.perf_counter() - t0)
    timings["featurize"] = best

    labels = np.array([float(i % 2) for i in range(len(corpus))])
    order = np.arange(len(corpus), dtype=np.int64)
    best = float("inf")
    for _ in range(repeats):
        weights = np.zeros(hash_dim)
        t0 = time.perf_counter()
        mod.sgd_epoch(weights, 0.0, indptr, indices, counts, labels, order,
                      0.1, 1e-6, 1)
        best = min(best, time.perf_counter() - t0)
    timings["sgd_epoch"] = best

    weights = np.zeros(hash_dim)
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        mod.score_csr(weights, 0.0, indptr, indices, counts)
        best = min(best, time.perf_counter() - t0)
    timings["score"] = best
    return timings


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sentences", type=int, default=4000)
    parser.add_argument("--hash-dim", type=int, default=1 << 20)
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    corpus = make_corpus(args.sentences, args.seed)
    n_tokens = sum(len(s) for s in corpus)
    print(f"{args.sentences} sentences, {n_tokens} tokens, "
          f"hash_dim=2^{args.hash_dim.bit_length() - 1}, "
          f"best of {args.repeats} runs\n")

    py = bench_backend(_kernel_py, corpus, args.hash_dim, args.repeats)
    if _kernel is None:
        print("compiled kernel not available; showing pure-Python times only")
        for op, t in py.items():
            print(f"{op:>12}: {t * 1000:9.1f} ms")
        return 0

    cy = bench_backend(_kernel, corpus, args.hash_dim, args.repeats)
    print(f"{'op':>12}  {'python':>10}  {'compiled':>10}  {'speedup':>8}")
    for op in py:
        ratio = py[op] / cy[op] if cy[op] > 0 else float("inf")
        print(f"{op:>12}  {py[op] * 1000:8.1f}ms  {cy[op] * 1000:8.1f}ms  "
              f"{ratio:7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
