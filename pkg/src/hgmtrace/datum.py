"""Hypergeometric datum model and per-datum combinatorics.

Covers validation, the zigzag function, weight and trace-formula exponents,
prime classification, breakpoints, residue-class geometry, the numerator and
denominator polynomials of the ratio P_{m+1}/P_m, and the constant-sign /
constant-power prefactors on each breakpoint range.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import DisjointnessViolation, GaloisStabilityViolation, LengthMismatch

__all__ = [
    "HypergeometricDatum",
    "PrimeClass",
    "RangeGeometry",
    "RangeConstants",
    "validate_datum",
    "parse_datum_text",
    "zigzag",
    "classify_prime",
    "range_geometry",
    "range_constants",
    "eta_xi_direct",
    "frac_part",
    "cut_points",
    "small_prime_threshold",
]


def frac_part(x: Fraction) -> Fraction:
    """{x} = x - floor(x)."""
    return x - Fraction(math.floor(x))


@dataclass(frozen=True)
class HypergeometricDatum:
    """The pair (alpha, beta) with derived invariants."""

    alpha: tuple[Fraction, ...]
    beta: tuple[Fraction, ...]
    r: int
    d: int
    weight: int
    D: int
    zero_count_beta: int
    breakpoints: tuple[Fraction, ...]

    @property
    def s(self) -> int:
        return len(self.breakpoints) - 1

    def swapped(self) -> "HypergeometricDatum":
        """The datum with alpha and beta exchanged."""
        return validate_datum(self.beta, self.alpha)

    def text(self) -> str:
        fmt = lambda t: ",".join(str(x) for x in t)
        return f"{fmt(self.alpha)};{fmt(self.beta)}"


class PrimeClass:
    """Prime classification labels."""

    WILD = "wild"
    TAME = "tame"
    GOOD = "good"
    SMALL = "small"


def _check_galois_stable(entries: tuple[Fraction, ...], which: str) -> None:
    by_denominator: dict[int, dict[int, int]] = {}
    for x in entries:
        by_denominator.setdefault(x.denominator, {}).setdefault(x.numerator, 0)
        by_denominator[x.denominator][x.numerator] += 1
    for b, counts in by_denominator.items():
        expected = {a for a in range(b) if math.gcd(a, b) == 1} if b > 1 else {0}
        mults = {counts.get(a, 0) for a in expected}
        if set(counts) - expected or len(mults) != 1 or 0 in mults:
            raise GaloisStabilityViolation(
                f"{which} is not stable under Galois: denominator {b} classes {counts}"
            )


def validate_datum(alpha, beta) -> HypergeometricDatum:
    """Build a datum, checking disjointness and Galois stability."""
    alpha = tuple(sorted(Fraction(x) for x in alpha))
    beta = tuple(sorted(Fraction(x) for x in beta))
    if len(alpha) != len(beta):
        raise LengthMismatch(f"|alpha| = {len(alpha)} != |beta| = {len(beta)}")
    if not alpha:
        raise LengthMismatch("empty datum")
    for t, name in ((alpha, "alpha"), (beta, "beta")):
        if any(x < 0 or x >= 1 for x in t):
            raise ValueError(f"{name} entries must lie in [0, 1)")
    if set(alpha) & set(beta):
        raise DisjointnessViolation(f"shared entries: {sorted(set(alpha) & set(beta))}")
    _check_galois_stable(alpha, "alpha")
    _check_galois_stable(beta, "beta")
    r = len(alpha)
    d = max(x.denominator for x in alpha + beta)
    zmax = max(_zigzag(alpha, beta, x) for x in alpha)
    zmin = min(_zigzag(alpha, beta, x) for x in beta)
    weight = zmax - zmin - 1
    zero_count_beta = sum(1 for x in beta if x == 0)
    two_d = weight + 1 - zero_count_beta
    if two_d % 2 != 0:
        raise ValueError("w + 1 - #{beta_j = 0} must be even for a balanced datum")
    breakpoints = tuple(sorted(set(alpha) | set(beta) | {Fraction(0), Fraction(1)}))
    return HypergeometricDatum(
        alpha, beta, r, d, weight, two_d // 2, zero_count_beta, breakpoints
    )


def parse_datum_text(text: str) -> HypergeometricDatum:
    """Parse "1/4,3/4;1/6,5/6" or a JSON pair of [num, den] lists."""
    text = text.strip()
    if text.startswith("["):
        alpha_raw, beta_raw = json.loads(text)
        return validate_datum(
            [Fraction(n, d) for n, d in alpha_raw], [Fraction(n, d) for n, d in beta_raw]
        )
    try:
        alpha_txt, beta_txt = text.split(";")
        alpha = [Fraction(t.strip()) for t in alpha_txt.split(",")]
        beta = [Fraction(t.strip()) for t in beta_txt.split(",")]
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"cannot parse datum {text!r}: {exc}") from exc
    return validate_datum(alpha, beta)


def _zigzag(alpha, beta, x: Fraction) -> int:
    return sum(1 for a in alpha if a <= x) - sum(1 for b in beta if b <= x)


def zigzag(datum: HypergeometricDatum, x: Fraction) -> int:
    """#{alpha_j <= x} - #{beta_j <= x}."""
    return _zigzag(datum.alpha, datum.beta, Fraction(x))


def small_prime_threshold(datum: HypergeometricDatum, e: int) -> int:
    """Primes at or below this bound bypass the amortized pipeline."""
    return max(e, datum.d * (datum.d - 1), 4 * datum.r * datum.r)


def classify_prime(datum: HypergeometricDatum, z: Fraction, p: int, e: int) -> str:
    """wild / tame / small / good classification of p."""
    z = Fraction(z)
    if any(x.denominator % p == 0 for x in datum.alpha + datum.beta):
        return PrimeClass.WILD
    zm1 = z - 1
    if (
        z.numerator % p == 0
        or z.denominator % p == 0
        or (zm1.numerator != 0 and zm1.numerator % p == 0)
    ):
        return PrimeClass.TAME
    if p <= small_prime_threshold(datum, e):
        return PrimeClass.SMALL
    return PrimeClass.GOOD


@dataclass(frozen=True)
class RangeGeometry:
    """Residue-class geometry of the range starting at breakpoint i."""

    i: int
    c: int
    a_i: int
    b_i: int
    r_i: int
    gamma_ic: Fraction
    h: dict  # gamma -> h_c(gamma, gamma_i) in (-1, 1]
    eps: dict  # gamma -> 1 iff gamma == gamma_i
    f_poly: tuple[Fraction, ...]  # prod over alpha of (h + k), rational coeffs
    g_poly: tuple[Fraction, ...]  # prod over beta of (h + k)
    clearing: int  # b with b*f, b*g integral


def _iota(x: Fraction, y: Fraction) -> int:
    return 1 if x <= y else 0


def _poly_mul(a: list[Fraction], b: list[Fraction]) -> list[Fraction]:
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] += x * y
    return out


def range_geometry(datum: HypergeometricDatum, i: int, c: int) -> RangeGeometry:
    """Geometry for breakpoint gamma_i = a_i/b_i and primes p = c mod b_i."""
    if not 0 <= i <= datum.s - 1:
        raise ValueError(f"range index {i} out of [0, {datum.s - 1}]")
    gamma_i = datum.breakpoints[i]
    a_i, b_i = gamma_i.numerator, gamma_i.denominator
    if math.gcd(c, b_i) != 1:
        raise ValueError(f"class {c} not a unit mod {b_i}")
    r_i = (a_i * (c - 1)) % b_i
    gamma_ic = Fraction(r_i, b_i)
    h: dict[Fraction, Fraction] = {}
    eps: dict[Fraction, int] = {}
    for g in set(datum.alpha + datum.beta):
        h[g] = g - gamma_i + _iota(g, gamma_i) - gamma_ic
        eps[g] = 1 if g == gamma_i else 0
        assert Fraction(-1) < h[g] <= 1
    f_poly = [Fraction(1)]
    for g in datum.alpha:
        f_poly = _poly_mul(f_poly, [h[g], Fraction(1)])
    g_poly = [Fraction(1)]
    for g in datum.beta:
        g_poly = _poly_mul(g_poly, [h[g], Fraction(1)])
    lcm = 1
    for v in h.values():
        lcm = lcm * v.denominator // math.gcd(lcm, v.denominator)
    clearing = lcm**datum.r
    return RangeGeometry(
        i, c % b_i, a_i, b_i, r_i, gamma_ic, h, eps, tuple(f_poly), tuple(g_poly), clearing
    )


@dataclass(frozen=True)
class RangeConstants:
    """Sign and p-power prefactors on a range, per residue class."""

    sigma_bar: int  # in {-1, 0, 1}; 0 when the open-range power >= e
    e_i: int  # working precision for the open range (e - power, clamped)
    tau_bar: int  # same for the breakpoint term at m = m_i
    e_prime_i: int


def _open_range_power_sign(datum: HypergeometricDatum, i: int) -> tuple[int, int]:
    """(power of p, sign) of the summand prefactor for m_i < m < m_{i+1}."""
    eta = zigzag(datum, datum.breakpoints[i])
    power = eta + datum.D + datum.zero_count_beta
    assert power >= 0
    return power, (-1) ** (eta % 2)


def _break_power_sign(datum: HypergeometricDatum, i: int, gamma_ic_zero: bool) -> tuple[int, int]:
    """(power, sign) of the prefactor at m = m_i."""
    gamma_i = datum.breakpoints[i]
    if i == 0:
        return datum.D, 1
    if gamma_ic_zero:
        # m_i/(1-p) lands exactly on gamma_i: entries equal to gamma_i flip sides
        eta = (
            zigzag(datum, gamma_i)
            + sum(1 for x in datum.beta if x == gamma_i)
            - sum(1 for x in datum.alpha if x == gamma_i)
        )
        xi = datum.zero_count_beta - sum(1 for x in datum.beta if x == gamma_i)
        return eta + xi + datum.D, (-1) ** (eta % 2)
    return _open_range_power_sign(datum, i - 1)


def range_constants(datum: HypergeometricDatum, e: int, i: int, c: int) -> RangeConstants:
    """sigma/tau prefactors for range i and primes p = c mod b_i."""
    gamma_i = datum.breakpoints[i]
    b_i = gamma_i.denominator
    if math.gcd(c, b_i) != 1:
        raise ValueError(f"class {c} not a unit mod {b_i}")
    ps, sign = _open_range_power_sign(datum, i)
    if ps >= e:
        sigma_bar, e_i = 0, 1
    else:
        sigma_bar, e_i = sign, e - ps
    r_i = (gamma_i.numerator * (c - 1)) % b_i
    ps_t, sign_t = _break_power_sign(datum, i, r_i == 0)
    if ps_t >= e:
        tau_bar, e_prime_i = 0, 1
    else:
        tau_bar, e_prime_i = sign_t, e - ps_t
    return RangeConstants(sigma_bar, e_i, tau_bar, e_prime_i)


def eta_xi_direct(datum: HypergeometricDatum, p: int, m: int) -> tuple[int, int]:
    """Exact (eta_m(alpha) - eta_m(beta), xi_m(beta)) from the definitions."""
    if not 0 <= m <= p - 2:
        raise ValueError("m out of range")
    shift = Fraction(m, 1 - p)
    eta = Fraction(0)
    for g in datum.alpha:
        eta += frac_part(g + shift) - frac_part(g)
    for g in datum.beta:
        eta -= frac_part(g + shift) - frac_part(g)
    assert eta.denominator == 1
    xi = datum.zero_count_beta - sum(1 for g in datum.beta if frac_part(g + shift) == 0)
    return int(eta), xi


def cut_points(datum: HypergeometricDatum, p: int) -> list[int]:
    """m_i = floor(gamma_i (p-1)) for every breakpoint."""
    return [math.floor(g * (p - 1)) for g in datum.breakpoints]
