"""Amortized Gamma_p series data over all primes up to a bound.

Builds, for every prime p in a range and every rational gamma with a fixed
denominator, the expansion Gamma_p(py + gamma) = c * exp s(y) mod p^e, from
batched factorials, batched harmonic sums, and the expansion of log Gamma_p
at 0.  All heavy lifting goes through the remainder forest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from gmpy2 import invert

from .arith import (
    ResidueElement,
    TruncatedSeries,
    padic_exp,
    padic_log,
    series_compose_shift,
)
from .forest import ForestJob, PolynomialMatrixGenerator, run_forest
from .arith import IntegerMatrix
from .primes import primes_up_to

__all__ = [
    "HarmonicTable",
    "GammaExpansion",
    "LogGammaAtZero",
    "factorial_batch",
    "harmonic_sums",
    "log_gamma_at_zero",
    "gamma_expansion_tables",
    "GammaTables",
    "eval_gamma",
]


def _default_primes(den: int, e: int, X: int, residue_class=None) -> list[int]:
    lo = max(e, den, 2)
    ps = [p for p in primes_up_to(X) if p > lo and den % p != 0]
    if residue_class is not None:
        m, r = residue_class
        ps = [p for p in ps if p % m == r % m]
    return ps


def _ceil_cut(gamma: Fraction, p: int) -> int:
    """ceil(gamma * p) - 1."""
    a, b = gamma.numerator, gamma.denominator
    return -((-a * p) // b) - 1


def factorial_batch(
    gamma: Fraction | int, e: int, X: int, residue_class=None, primes=None
) -> dict[int, ResidueElement]:
    """(ceil(gamma p) - 1)! mod p^e for all applicable p <= X."""
    gamma = Fraction(gamma)
    if not 0 < gamma <= 1:
        raise ValueError("gamma must lie in (0, 1]")
    if primes is None:
        primes = _default_primes(gamma.denominator, e, X, residue_class)
    if not primes:
        return {}
    gen = PolynomialMatrixGenerator([[[1, 1]]])  # A_k = [k + 1]
    cuts = [_ceil_cut(gamma, p) for p in primes]
    res = run_forest(ForestJob(gen, primes, cuts, e))
    return {p: ResidueElement(p, e, int(res[p].entries[0][0])) for p in primes}


@dataclass
class HarmonicTable:
    """Truncated power sums H_{j,gamma}(p) = sum_{i < ceil(gamma p)} i^-j."""

    j: int
    gamma: Fraction
    precision: int  # values live mod p^precision
    values: dict  # p -> ResidueElement
    factorial_powers: dict  # p -> ResidueElement, prod_{i<ceil(gamma p)} i^j


def harmonic_sums(
    j: int, gamma: Fraction | int, e: int, X: int, residue_class=None, primes=None
) -> HarmonicTable:
    """H_{j,gamma}(p) mod p^{e-j}, batched over primes.

    The 2x2 generator [[i^j, 0], [1, i^j]] accumulates the sum in the ratio
    of the two entries of the selected row; its second entry is the product
    of the i^j, reused as a factorial byproduct when j = 1.
    """
    gamma = Fraction(gamma)
    if j < 1 or e - j < 1:
        raise ValueError("need j >= 1 and e - j >= 1")
    if primes is None:
        primes = _default_primes(gamma.denominator, e, X, residue_class)
    prec = e - j
    if not primes:
        return HarmonicTable(j, gamma, prec, {}, {})
    # (k+1)^j coefficients
    pow_coeffs = [math.comb(j, t) for t in range(j + 1)]
    gen = PolynomialMatrixGenerator([[pow_coeffs, [0]], [[1], pow_coeffs]])
    cuts = [_ceil_cut(gamma, p) for p in primes]
    v = IntegerMatrix(1, 2, [[0, 1]])
    res = run_forest(ForestJob(gen, primes, cuts, prec, row_selector=v))
    values, fpows = {}, {}
    for p in primes:
        m = p**prec
        s21, s11 = int(res[p].entries[0][0]), int(res[p].entries[0][1])
        if s11 % p == 0:
            raise ArithmeticError(f"harmonic product not a unit at p = {p}")
        values[p] = ResidueElement(p, prec, s21 * int(invert(s11, m)) % m)
        fpows[p] = ResidueElement(p, prec, s11)
    return HarmonicTable(j, gamma, prec, values, fpows)


@dataclass
class LogGammaAtZero:
    """Coefficients w_1..w_{e-1} of log Gamma_p(py) in y, each mod p^e."""

    prime: int
    exponent: int
    coeffs: tuple  # (w_1, ..., w_{e-1})

    def series(self) -> TruncatedSeries:
        return TruncatedSeries(
            self.prime, self.exponent, (0,) + self.coeffs, graded=False, order=self.exponent
        )


def log_gamma_at_zero(e: int, X: int, primes=None) -> dict[int, LogGammaAtZero]:
    """Series of log Gamma_p(py) mod p^e for all e < p <= X."""
    if e < 2:
        raise ValueError("log_gamma_at_zero requires e >= 2")
    if primes is None:
        primes = _default_primes(1, e, X)
    if any(p <= e for p in primes):
        raise ValueError("primes must exceed e")
    if not primes:
        return {}
    # one forest with a raised modulus gives (p-1)! mod p^e as a byproduct
    t1 = harmonic_sums(1, 1, e + 1, X, primes=primes)
    harmonic = {1: t1}
    for jj in range(2, e - 1):
        harmonic[jj] = harmonic_sums(jj, 1, e, X, primes=primes)
    # A_{ij} = binom(j, i-1), 1 <= i <= j <= e-1
    n = e - 1
    out = {}
    for p in primes:
        pe = p**e
        v = [0] * (n + 1)  # 1-based
        fact = t1.factorial_powers[p].value % pe
        v[1] = padic_log(ResidueElement(p, e, -fact)).value
        for j in range(2, n + 1):
            h = harmonic[j - 1].values[p].value
            term = p ** (j - 1) * h % pe * int(invert(j - 1, pe)) % pe
            v[j] = term if j % 2 == 0 else (-term) % pe
        w = [0] * (n + 1)
        for j in range(n, 0, -1):
            acc = v[j]
            for j2 in range(j + 1, n + 1):
                acc -= math.comb(j2, j - 1) * w[j2]
            w[j] = acc % pe * int(invert(j, pe)) % pe
        out[p] = LogGammaAtZero(p, e, tuple(w[1:]))
    return out


@dataclass
class GammaExpansion:
    """Gamma_p(py + gamma) = c * exp s(y) mod p^e, with s(0) = 0.

    s is a series in the integer variable y; its degree-h coefficient is
    divisible by p^h.
    """

    gamma: Fraction
    prime: int
    exponent: int
    c: ResidueElement
    s: TruncatedSeries


def eval_gamma(exp: GammaExpansion, t: ResidueElement) -> ResidueElement:
    """Gamma_p(t + gamma) mod p^e for t = 0 mod p."""
    p, e = exp.prime, exp.exponent
    if t.value % p != 0:
        raise ValueError("t must be divisible by p")
    y = t.value // p
    sval = exp.s.evaluate(y)
    return exp.c * padic_exp(sval)


class GammaTables:
    """All expansions with denominator exactly d, for primes up to X."""

    def __init__(self, d: int, e: int, X: int):
        self.d = d
        self.e = e
        self.X = X
        self.expansions: dict[tuple[int, int], GammaExpansion] = {}  # (numerator, p)
        self.log_zero: dict[int, LogGammaAtZero] = {}

    def primes(self) -> list[int]:
        return sorted({p for (_, p) in self.expansions})

    def expansion(self, gamma: Fraction, p: int) -> GammaExpansion:
        gamma = Fraction(gamma)
        if gamma.denominator != self.d:
            raise KeyError(f"table holds denominator {self.d}, not {gamma.denominator}")
        return self.expansions[(gamma.numerator, p)]


def _numerators(d: int) -> list[int]:
    if d == 1:
        return [1]
    return [a for a in range(1, d) if math.gcd(a, d) == 1]


def gamma_expansion_tables(
    d: int,
    e: int,
    X: int,
    residue_class=None,
    use_reflection: bool = True,
    cache=None,
) -> GammaTables:
    """Expansions of Gamma_p(py + a/d) for all units a mod d and all p.

    With `use_reflection` (default), only a <= d/2 is computed directly; the
    remaining numerators come from the reflection identity.  `cache` is an
    optional on-disk store (see gammacache); pass None to always recompute.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    table = GammaTables(d, e, X)
    classes = [c for c in range(1, max(d, 2)) if math.gcd(c, d) == 1] if d > 1 else [0]
    for c in classes:
        if residue_class is not None and d > 1 and c % d != residue_class % d:
            continue
        if cache is not None:
            cached = cache.load(d, e, X, c)
            if cached is not None:
                table.expansions.update(cached[0])
                table.log_zero.update(cached[1])
                continue
        part = _build_class(d, e, X, c, use_reflection)
        table.expansions.update(part[0])
        table.log_zero.update(part[1])
        if cache is not None:
            cache.store(d, e, X, c, part)
    return table


def _build_class(d: int, e: int, X: int, c: int, use_reflection: bool):
    """Expansions for all numerators of S_d, primes p = c mod d."""
    rc = (d, c) if d > 1 else None
    primes = _default_primes(d, e, X, rc)
    expansions: dict[tuple[int, int], GammaExpansion] = {}
    log_zero: dict[int, LogGammaAtZero] = {}
    if not primes:
        return expansions, log_zero

    lg0 = log_gamma_at_zero(e, X, primes=primes) if e >= 2 else None

    if d == 1:
        # gamma = 1: Gamma_p(py + 1) = -Gamma_p(py)
        for p in primes:
            if lg0 is not None:
                log_zero[p] = lg0[p]
                s = lg0[p].series()
            else:
                s = TruncatedSeries(p, e, [0], order=e)
            expansions[(1, p)] = GammaExpansion(
                Fraction(1), p, e, ResidueElement(p, e, -1), s
            )
        return expansions, log_zero

    numerators = _numerators(d)
    direct = [a for a in numerators if 2 * a <= d] if use_reflection else numerators
    inv_c = int(invert(c, d))
    shifted = {a: (-a * inv_c) % d for a in direct}  # a -> b of the recentering
    needed = sorted(set(shifted.values()))

    # batched ingredients per recentered numerator b
    harmonic: dict[int, dict[int, HarmonicTable]] = {}
    factorials: dict[int, dict[int, ResidueElement]] = {}
    for b in needed:
        gb = Fraction(b, d)
        tabs = {}
        if e >= 2:
            tabs[1] = harmonic_sums(1, gb, e + 1, X, primes=primes)
            for j in range(2, e):
                tabs[j] = harmonic_sums(j, gb, e, X, primes=primes)
            factorials[b] = {
                p: tabs[1].factorial_powers[p].reduce(e) for p in primes
            }
        else:
            factorials[b] = factorial_batch(gb, e, X, primes=primes)
        harmonic[b] = tabs

    for p in primes:
        pe = p**e
        # translate-identity series per recentered numerator
        translated: dict[int, TruncatedSeries] = {}
        for b in needed:
            coeffs = [0] * e
            if e >= 2:
                base = lg0[p].coeffs
                for h in range(1, e):
                    coeffs[h] = base[h - 1]
                for j in range(1, e):
                    hjp = harmonic[b][j].values[p].value
                    term = pow(-p, j, pe) * hjp % pe * int(invert(j, pe)) % pe
                    coeffs[j] = (coeffs[j] - term) % pe
            translated[b] = TruncatedSeries(p, e, coeffs, order=e)
        for a in direct:
            b = shifted[a]
            ell = series_compose_shift(translated[b], Fraction(-b, d))
            const = ell.coeffs[0]
            s = TruncatedSeries(p, e, (0,) + ell.coeffs[1:], order=e)
            cut1 = _ceil_cut(Fraction(b, d), p) + 1  # ceil(b p / d)
            gval = (-1) ** (cut1 % 2) * factorials[b][p].value % pe
            cexp = ResidueElement(p, e, gval) * padic_exp(ResidueElement(p, e, const))
            expansions[(a, p)] = GammaExpansion(Fraction(a, d), p, e, cexp, s)
        if use_reflection:
            for a in numerators:
                if (a, p) in expansions:
                    continue
                partner = expansions[(d - a, p)]
                x0 = Fraction(a, d).numerator * int(invert(d, p)) % p
                x0 = x0 if x0 != 0 else p
                cval = (-1) ** (x0 % 2) * int(invert(partner.c.value, pe)) % pe
                s = partner.s.negate_variable().scale(-1)
                expansions[(a, p)] = GammaExpansion(
                    Fraction(a, d), p, e, ResidueElement(p, e, cval), s
                )
    return expansions, log_zero
