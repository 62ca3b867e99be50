"""Compare the compiled MinHash kernel with the numpy fallback on schema-sized inputs.

Usage: python benchmarks/bench_minhash.py [--tables 60] [--repeat 5]

Reports the kernel alone and the whole compression stage.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from iesr.harness.synthetic import planted_schema
from iesr.schema_link import kernels
from iesr.schema_link.compress import compress_schema
from iesr.schema_link.lsh import element_texts


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--tables", type=int, default=60)
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--hashes", type=int, default=72)
    p.add_argument("--ngram", type=int, default=3)
    args = p.parse_args()

    schema = planted_schema(args.tables, seed=0).schema
    texts = [t for _, t in element_texts(schema)]
    a, b = kernels.hash_family(args.hashes, seed=0)
    print(f"active backend: {kernels.BACKEND}")
    print(f"{len(texts)} element texts, {args.hashes} hashes, {args.ngram}-grams")

    slow = best_of(lambda: kernels.python_signatures(texts, args.ngram, a, b), args.repeat)
    print(f"python : {slow * 1e3:9.2f} ms")
    if kernels.BACKEND == "cython":
        assert np.array_equal(
            kernels.minhash_signatures(texts, args.ngram, a, b), kernels.python_signatures(texts, args.ngram, a, b)
        )
        fast = best_of(lambda: kernels.minhash_signatures(texts, args.ngram, a, b), args.repeat)
        print(f"cython : {fast * 1e3:9.2f} ms  ({slow / fast:.1f}x)")
    else:
        print("cython : extension not built")

    # whole compression stage, swapping the kernel in place
    planted = planted_schema(args.tables, seed=0)
    run = lambda: compress_schema(planted.schema, planted.validated)
    active = kernels._signatures
    kernels._signatures = kernels._minhash_py.signatures
    try:
        slow_stage = best_of(run, args.repeat)
    finally:
        kernels._signatures = active
    print(f"compress_schema, python kernel : {slow_stage * 1e3:9.2f} ms")
    if kernels.BACKEND == "cython":
        fast_stage = best_of(run, args.repeat)
        print(f"compress_schema, cython kernel : {fast_stage * 1e3:9.2f} ms  ({slow_stage / fast_stage:.2f}x)")


if __name__ == "__main__":
    main()
