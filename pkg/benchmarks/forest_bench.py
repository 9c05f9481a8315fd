"""Benchmark: remainder-forest batch product vs one-prime-at-a-time products.

Runs the weight-1 example datum for growing prime bounds and reports wall
time per phase, plus the naive per-prime matrix-product time for the same
jobs, to show the amortized speedup.

Usage: python benchmarks/forest_bench.py [max_exponent]
       (bounds X = 2^12 .. 2^max_exponent, default 16)
"""

from __future__ import annotations

import sys
import time
from fractions import Fraction

from hgmtrace.datum import PrimeClass, classify_prime, parse_datum_text, small_prime_threshold
from hgmtrace.engine import TraceEngine, make_range_jobs
from hgmtrace.forest import ForestJob, naive_product, run_forest
from hgmtrace.primes import primes_up_to

DATUM = "1/4,3/4;1/6,5/6"
Z = Fraction(314, 159)


def naive_time(datum, z, e, X) -> float:
    thr = small_prime_threshold(datum, e)
    primes = [
        p
        for p in primes_up_to(X)
        if p > thr and classify_prime(datum, z, p, e) == PrimeClass.GOOD
    ]
    jobs = make_range_jobs(datum, z, e)
    t0 = time.perf_counter()
    for job in jobs:
        if job.generator is None:
            continue
        for p in primes:
            if job.b_i > 1 and p % job.b_i != job.c:
                continue
            import math

            gap = math.floor(job.gamma_next * (p - 1)) - math.floor(job.gamma_i * (p - 1))
            if gap < 2:
                continue
            one = ForestJob(job.generator, [p], [gap - 1], job.e_i, row_selector=job.row_selector)
            naive_product(one)
    return time.perf_counter() - t0


def main():
    max_exp = int(sys.argv[1]) if len(sys.argv) > 1 else 16
    datum = parse_datum_text(DATUM)
    print(f"datum {DATUM}, z = {Z}")
    print(f"{'X':>9} {'amortized':>10} {'naive':>10} {'speedup':>8}")
    for k in range(12, max_exp + 1):
        X = 1 << k
        engine = TraceEngine(datum, Z, X)
        t0 = time.perf_counter()
        engine.run()
        amortized = time.perf_counter() - t0
        naive = naive_time(engine.datum, engine.z, engine.e, X) if k <= 15 else float("nan")
        speedup = naive / amortized if naive == naive else float("nan")
        print(f"{X:>9} {amortized:>9.2f}s {naive:>9.2f}s {speedup:>7.1f}x")
        for name, secs in engine.phase_times.items():
            print(f"          {name}: {secs:.2f}s")


if __name__ == "__main__":
    main()
