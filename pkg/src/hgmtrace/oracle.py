"""Slow, independent, definitional evaluators used for golden data and tests.

Everything here works straight from the defining product formula
Gamma_p(n+1) = (-1)^{n+1} prod_{i<=n, p not| i} i and the trace-formula sum;
nothing is shared with the amortized pipeline beyond basic residue helpers.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from gmpy2 import invert, mpz

from .arith import ResidueElement, fraction_mod, teichmuller_lift
from .datum import HypergeometricDatum, PrimeClass, classify_prime, eta_xi_direct

__all__ = [
    "OracleConfig",
    "OracleBoundExceeded",
    "gamma_p_direct",
    "pochhammer_star",
    "H_p_direct",
]

_CHUNK = 1 << 21


class OracleBoundExceeded(ValueError):
    """The requested p^e exceeds the configured direct-evaluation bound."""


@dataclass
class OracleConfig:
    max_pe: int = 1 << 31
    memoize: bool = True


_DEFAULT_CONFIG = OracleConfig()
_MEMO: dict = {}


def _check_bound(p: int, e: int, config: OracleConfig) -> int:
    pe = p**e
    if pe > config.max_pe:
        raise OracleBoundExceeded(f"p^e = {pe} exceeds oracle bound {config.max_pe}")
    return pe


def _block_product(lo: int, hi: int, p: int, pe: int) -> int:
    """prod of i in [lo, hi) with p not dividing i, mod pe (numpy fold)."""
    acc = mpz(1)
    if pe >= 1 << 32:
        # uint64 pairwise products would overflow; plain loop
        for i in range(lo, hi):
            if i % p:
                acc = acc * i % pe
        return int(acc)
    start = lo
    while start < hi:
        stop = min(start + _CHUNK, hi)
        arr = np.arange(start, stop, dtype=np.uint64)
        arr = arr[arr % p != 0] % pe
        arr = arr[arr != 0] if pe == 1 else arr
        while arr.size > 1:
            if arr.size % 2:
                tail = int(arr[-1])
                arr = arr[:-1]
            else:
                tail = 1
            arr = arr[0::2] * arr[1::2] % pe
            if tail != 1:
                arr[0] = int(arr[0]) * tail % pe
        if arr.size:
            acc = acc * int(arr[0]) % pe
        start = stop
    return int(acc)


def _pfree_prefixes(targets: list[int], p: int, pe: int) -> dict[int, int]:
    """{n: prod_{i<=n, p not| i} i mod pe} for each requested n (sorted sweep)."""
    out: dict[int, int] = {}
    acc = 1
    pos = 1
    for n in sorted(set(targets)):
        if n >= pos:
            acc = acc * _block_product(pos, n + 1, p, pe) % pe
            pos = n + 1
        out[n] = acc
    return out


def _gamma_from_prefix(rep: int, prefixes: dict[int, int], pe: int) -> int:
    """Gamma_p at the integer representative rep in [1, pe]."""
    return (-1) ** (rep % 2) * prefixes[rep - 1] % pe


def _representative(x: Fraction, p: int, e: int) -> int:
    """Integer N in [1, p^e] congruent to x."""
    pe = p**e
    n = fraction_mod(x, pe)
    return n if n != 0 else pe


def gamma_p_direct(
    x: Fraction | int, p: int, e: int, config: OracleConfig = _DEFAULT_CONFIG
) -> ResidueElement:
    """Gamma_p(x) mod p^e by the defining product over a representative."""
    if p == 2:
        raise ValueError("p = 2 is not supported")
    x = Fraction(x)
    if x.denominator % p == 0:
        raise ValueError("denominator of x divisible by p")
    pe = _check_bound(p, e, config)
    rep = _representative(x, p, e)
    key = (p, e, rep)
    if config.memoize and key in _MEMO:
        return ResidueElement(p, e, _MEMO[key])
    prefixes = _pfree_prefixes([rep - 1], p, pe)
    value = _gamma_from_prefix(rep, prefixes, pe)
    if config.memoize:
        _MEMO[key] = value
    return ResidueElement(p, e, value)


def pochhammer_star(
    gamma: Fraction, m: int, p: int, e: int, config: OracleConfig = _DEFAULT_CONFIG
) -> ResidueElement:
    """(gamma)*_m = Gamma_p({gamma + m/(1-p)}) / Gamma_p({gamma}) mod p^e."""
    gamma = Fraction(gamma)
    shifted = gamma + Fraction(m, 1 - p)
    shifted -= int(shifted) if shifted >= 0 else int(shifted) - 1
    if shifted == 1:
        shifted = Fraction(0)
    num = gamma_p_direct(shifted, p, e, config)
    den = gamma_p_direct(gamma - int(gamma), p, e, config)
    return num / den


def _shift_data(gamma: Fraction, m: int, p: int, pe: int, inv_bp: int):
    """(representative of {gamma + m/(1-p)} mod pe, carry flag, hits-zero flag).

    carry is 1 when gamma + m/(1-p) < 0 (so the fractional part adds 1),
    which is exactly the contribution of this entry to eta_m.
    """
    a, b = gamma.numerator, gamma.denominator
    num = a * (p - 1) - m * b
    hits_zero = num == 0
    carry = 1 if num < 0 else 0
    rep = (num + carry * b * (p - 1)) * inv_bp % pe
    return (pe if rep == 0 else rep), carry, hits_zero


def H_p_direct(
    datum: HypergeometricDatum,
    z: Fraction,
    p: int,
    e: int,
    config: OracleConfig = _DEFAULT_CONFIG,
) -> ResidueElement:
    """The full (p-1)-term trace sum, evaluated definitionally."""
    z = Fraction(z)
    if Fraction(0) in datum.alpha:
        # defined through the swap identity when 0 sits in alpha
        return H_p_direct(datum.swapped(), 1 / z, p, e, config)
    cls = classify_prime(datum, z, p, e)
    if cls in (PrimeClass.WILD, PrimeClass.TAME):
        raise ValueError(f"p = {p} is {cls} for this datum and z")
    pe = _check_bound(p, e, config)
    tz = teichmuller_lift(z, p, e).value

    gammas = list(datum.alpha) + [g for g in datum.beta]
    nalpha = len(datum.alpha)
    inv_cache = {
        b: int(invert(b * (p - 1), pe))
        for b in {g.denominator for g in gammas}
    }
    # collect all Gamma_p arguments first, then one sorted sweep
    per_m = []
    targets = []
    for m in range(p - 1):
        row = []
        for g in gammas:
            rep, carry, hz = _shift_data(g, m, p, pe, inv_cache[g.denominator])
            row.append((rep, carry, hz))
            targets.append(rep - 1)
        per_m.append(row)
    base_reps = [_representative(g if g != 0 else Fraction(0), p, e) for g in gammas]
    targets.extend(rep - 1 for rep in base_reps)
    prefixes = _pfree_prefixes(targets, p, pe)

    base = 1
    for j, rep in enumerate(base_reps):
        gv = _gamma_from_prefix(rep, prefixes, pe)
        base = base * (gv if j < nalpha else int(invert(gv, pe))) % pe
    inv_base = int(invert(base, pe))

    acc = 0
    zpow = 1
    for m in range(p - 1):
        row = per_m[m]
        eta = 0
        zero_hits = 0
        for j, (rep, carry, hz) in enumerate(row):
            if j < nalpha:
                eta += carry
            else:
                eta -= carry
                zero_hits += hz
        xi = datum.zero_count_beta - zero_hits
        ps = eta + xi + datum.D
        assert ps >= 0
        if ps < e:
            prod = 1
            for j, (rep, carry, hz) in enumerate(row):
                gv = _gamma_from_prefix(rep, prefixes, pe)
                prod = prod * (gv if j < nalpha else int(invert(gv, pe))) % pe
            term = (-1) ** (eta % 2) * p**ps * prod % pe * inv_base % pe * zpow % pe
            acc = (acc + term) % pe
        zpow = zpow * tz % pe
    acc = acc * int(invert(1 - p, pe)) % pe
    return ResidueElement(p, e, acc)
