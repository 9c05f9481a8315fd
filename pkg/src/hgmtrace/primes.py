"""Prime sieving helpers."""

from __future__ import annotations

import numpy as np


def primes_up_to(limit: int) -> list[int]:
    """Return all primes p <= limit, ascending."""
    if limit < 2:
        return []
    sieve = np.ones(limit + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, int(limit**0.5) + 1):
        if sieve[p]:
            sieve[p * p :: p] = False
    return [int(p) for p in np.nonzero(sieve)[0]]


def primes_in_range(lo: int, hi: int) -> list[int]:
    """Return all primes with lo < p <= hi."""
    return [p for p in primes_up_to(hi) if p > lo]
