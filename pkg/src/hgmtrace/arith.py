"""Exact rational, modular, and truncated-series arithmetic.

Provides residues with an attached modulus p^e, truncated power series with
either uniform or graded (c_h known mod p^{e-h}) precision, the p-adic
logarithm/exponential, and the Teichmuller lift.  p = 2 is rejected
everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from gmpy2 import invert, mpz, powmod

__all__ = [
    "ResidueElement",
    "TruncatedSeries",
    "IntegerMatrix",
    "fraction_mod",
    "padic_log",
    "padic_exp",
    "teichmuller_lift",
    "series_compose_shift",
]


def _check_prime_ok(p: int) -> None:
    if p == 2:
        raise ValueError("p = 2 is not supported")
    if p < 2:
        raise ValueError(f"not a prime: {p}")


def fraction_mod(x: Fraction | int, modulus: int) -> int:
    """Residue of a rational with unit denominator, in [0, modulus)."""
    x = Fraction(x)
    return int(x.numerator * invert(x.denominator, modulus)) % modulus


@dataclass(frozen=True)
class ResidueElement:
    """An integer residue carrying its modulus p^e."""

    prime: int
    exponent: int
    value: int

    def __post_init__(self) -> None:
        _check_prime_ok(self.prime)
        if self.exponent < 1:
            raise ValueError("exponent must be >= 1")
        object.__setattr__(self, "value", int(self.value) % self.modulus)

    @property
    def modulus(self) -> int:
        return self.prime**self.exponent

    @classmethod
    def from_fraction(cls, x: Fraction | int, p: int, e: int) -> "ResidueElement":
        return cls(p, e, fraction_mod(x, p**e))

    def _coerce(self, other) -> "ResidueElement":
        if isinstance(other, ResidueElement):
            if (other.prime, other.exponent) != (self.prime, self.exponent):
                raise ValueError("mismatched moduli")
            return other
        if isinstance(other, (int, Fraction)):
            return ResidueElement.from_fraction(other, self.prime, self.exponent)
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        return ResidueElement(self.prime, self.exponent, self.value + o.value)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        return ResidueElement(self.prime, self.exponent, self.value - o.value)

    def __rsub__(self, other):
        o = self._coerce(other)
        return ResidueElement(self.prime, self.exponent, o.value - self.value)

    def __mul__(self, other):
        o = self._coerce(other)
        return ResidueElement(self.prime, self.exponent, self.value * o.value)

    __rmul__ = __mul__

    def __neg__(self):
        return ResidueElement(self.prime, self.exponent, -self.value)

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        return ResidueElement(self.prime, self.exponent, int(powmod(self.value, n, self.modulus)))

    def inverse(self) -> "ResidueElement":
        return ResidueElement(self.prime, self.exponent, int(invert(self.value, self.modulus)))

    def __truediv__(self, other):
        o = self._coerce(other)
        return self * o.inverse()

    def reduce(self, e: int) -> "ResidueElement":
        """Reduction to a smaller exponent (total for e <= self.exponent)."""
        if e > self.exponent:
            raise ValueError("cannot increase precision")
        return ResidueElement(self.prime, e, self.value % self.prime**e)

    def is_unit(self) -> bool:
        return self.value % self.prime != 0


def _log_term_count(p: int, e: int) -> int:
    """Smallest bound N with n - floor(log_p n) >= e for all n > N."""
    n = 1
    while True:
        a = 0
        q = p
        while q <= n:
            a += 1
            q *= p
        if n - a >= e:
            return n
        n += 1


def padic_log(u: ResidueElement) -> ResidueElement:
    """log of a residue with u = 1 mod p, truncated mod p^e."""
    p, e = u.prime, u.exponent
    _check_prime_ok(p)
    if u.value % p != 1:
        raise ValueError("padic_log requires u = 1 mod p")
    nmax = _log_term_count(p, e)
    amax = 0
    q = p
    while q <= nmax:
        amax += 1
        q *= p
    big = p ** (e + amax)
    t = u.value % big
    tm1 = (t - 1) % big
    acc = mpz(0)
    tn = mpz(1)
    for n in range(1, nmax + 1):
        tn = tn * tm1 % big
        a = 0
        m = n
        while m % p == 0:
            a += 1
            m //= p
        term = (tn // p**a) * invert(m, big) % big
        acc = (acc - term if n % 2 == 0 else acc + term) % big
    return ResidueElement(p, e, int(acc) % p**e)


def padic_exp(x: ResidueElement) -> ResidueElement:
    """exp of a residue with x = 0 mod p, truncated mod p^e; requires p > e."""
    p, e = x.prime, x.exponent
    _check_prime_ok(p)
    if p <= e:
        raise ValueError("padic_exp requires p > e")
    if x.value % p != 0:
        raise ValueError("padic_exp requires x = 0 mod p")
    pe = p**e
    acc = mpz(1)
    term = mpz(1)
    n = 1
    # for p > e all terms up to n < p have unit factorials, and terms with
    # n >= e vanish mod p^e because v(x^n) >= n
    while n < e:
        term = term * x.value % pe * invert(n, pe) % pe
        acc = (acc + term) % pe
        n += 1
    return ResidueElement(p, e, int(acc))


def teichmuller_lift(z: Fraction | int, p: int, e: int) -> ResidueElement:
    """The (p-1)-st root of unity congruent to z mod p."""
    _check_prime_ok(p)
    z = Fraction(z)
    if z.numerator % p == 0 or z.denominator % p == 0:
        raise ValueError("z must be a p-adic unit")
    pe = p**e
    x = mpz(fraction_mod(z, pe))
    for _ in range(max(e - 1, 0)):
        x = powmod(x, p, pe)
    # fixed point check: x^p = x once fully converged
    assert powmod(x, p, pe) == x
    return ResidueElement(p, e, int(x))


class TruncatedSeries:
    """Finite coefficient list over residues mod p^e.

    In graded mode coefficient h is meaningful mod p^{e-h} (the series
    variable carries p-adic valuation >= 1) and at most e coefficients are
    retained.  In uniform mode all coefficients live mod p^e and the length
    is capped by `order`.
    """

    __slots__ = ("prime", "exponent", "coeffs", "graded", "order")

    def __init__(self, p: int, e: int, coeffs, graded: bool = False, order: int | None = None):
        _check_prime_ok(p)
        self.prime = p
        self.exponent = e
        self.graded = graded
        if order is None:
            order = e if graded else max(len(coeffs), 1)
        if graded:
            order = min(order, e)
        self.order = order
        pe = p**e
        out = []
        for h, c in enumerate(coeffs[:order]):
            m = p ** max(e - h, 0) if graded else pe
            out.append(int(c) % m if m > 1 else 0)
        while len(out) < order:
            out.append(0)
        self.coeffs = tuple(out)

    # -- helpers -------------------------------------------------------
    def _like(self, coeffs) -> "TruncatedSeries":
        return TruncatedSeries(self.prime, self.exponent, coeffs, self.graded, self.order)

    def _check_compat(self, other: "TruncatedSeries") -> None:
        if (self.prime, self.exponent, self.graded) != (other.prime, other.exponent, other.graded):
            raise ValueError("incompatible series")

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, TruncatedSeries)
            and (self.prime, self.exponent, self.graded, self.coeffs)
            == (other.prime, other.exponent, other.graded, other.coeffs)
        )

    def __repr__(self) -> str:
        mode = "graded" if self.graded else "uniform"
        return f"TruncatedSeries(p={self.prime}, e={self.exponent}, {mode}, {list(self.coeffs)})"

    # -- arithmetic ----------------------------------------------------
    def __add__(self, other: "TruncatedSeries") -> "TruncatedSeries":
        self._check_compat(other)
        n = max(self.order, other.order)
        a = list(self.coeffs) + [0] * (n - self.order)
        b = list(other.coeffs) + [0] * (n - other.order)
        return TruncatedSeries(
            self.prime, self.exponent, [x + y for x, y in zip(a, b)], self.graded, n
        )

    def __sub__(self, other: "TruncatedSeries") -> "TruncatedSeries":
        return self + other.scale(-1)

    def __mul__(self, other: "TruncatedSeries") -> "TruncatedSeries":
        self._check_compat(other)
        n = min(self.order, other.order) if not self.graded else self.exponent
        out = [0] * n
        pe = self.prime**self.exponent
        for i, a in enumerate(self.coeffs):
            if a == 0 or i >= n:
                continue
            for j, b in enumerate(other.coeffs):
                if i + j >= n:
                    break
                out[i + j] = (out[i + j] + a * b) % pe
        return TruncatedSeries(self.prime, self.exponent, out, self.graded, n)

    def scale(self, c: int | Fraction) -> "TruncatedSeries":
        cv = fraction_mod(c, self.prime**self.exponent)
        return self._like([cv * x for x in self.coeffs])

    def negate_variable(self) -> "TruncatedSeries":
        """s(-y)."""
        return self._like([(-c if h % 2 else c) for h, c in enumerate(self.coeffs)])

    def exp(self) -> "TruncatedSeries":
        """exp of a series with zero constant term; requires p > order."""
        if self.coeffs and self.coeffs[0] % self.prime != 0:
            raise ValueError("exp requires constant term = 0 mod p")
        if self.coeffs and self.coeffs[0] != 0 and not self.graded:
            raise ValueError("exp requires zero constant term")
        if self.prime <= self.order:
            raise ValueError("exp requires p > truncation order")
        pe = self.prime**self.exponent
        one = self._like([1] + [0] * (self.order - 1))
        acc = one
        power = one
        fact = 1
        for k in range(1, self.order):
            power = power * self
            fact = fact * k
            acc = acc + power.scale(Fraction(1, fact))
        return acc

    def inverse(self) -> "TruncatedSeries":
        """Multiplicative series inverse; constant term must be a unit."""
        if not self.coeffs or self.coeffs[0] % self.prime == 0:
            raise ValueError("inverse requires unit constant term")
        pe = self.prime**self.exponent
        inv0 = int(invert(self.coeffs[0], pe))
        out = [inv0] + [0] * (self.order - 1)
        for h in range(1, self.order):
            s = 0
            for j in range(1, h + 1):
                if j < len(self.coeffs):
                    s += self.coeffs[j] * out[h - j]
            out[h] = (-inv0 * s) % pe
        return self._like(out)

    def evaluate(self, y: int | Fraction | ResidueElement) -> ResidueElement:
        pe = self.prime**self.exponent
        yv = y.value if isinstance(y, ResidueElement) else fraction_mod(y, pe)
        acc = 0
        power = 1
        for c in self.coeffs:
            acc = (acc + c * power) % pe
            power = power * yv % pe
        return ResidueElement(self.prime, self.exponent, acc)

    def to_graded(self) -> "TruncatedSeries":
        return TruncatedSeries(self.prime, self.exponent, self.coeffs, True)


def series_compose_shift(s: TruncatedSeries, offset: Fraction | int) -> TruncatedSeries:
    """Coefficients of s(y + offset); offset denominator must be prime to p."""
    offset = Fraction(offset)
    if offset.denominator % s.prime == 0:
        raise ValueError("offset denominator divisible by p")
    pe = s.prime**s.exponent
    t = fraction_mod(offset, pe)
    n = s.order
    out = [0] * n
    # binomial recoefficienting: out[h] = sum_j c_j * C(j, h) * t^(j-h)
    binom = [[0] * n for _ in range(n)]
    for j in range(n):
        binom[j][0] = 1
        for h in range(1, j + 1):
            binom[j][h] = binom[j - 1][h - 1] + (binom[j - 1][h] if h <= j - 1 else 0)
    for j, c in enumerate(s.coeffs):
        if c == 0:
            continue
        tp = 1
        for h in range(j, -1, -1):
            out[h] = (out[h] + c * binom[j][h] * tp) % pe
            tp = tp * t % pe
    return TruncatedSeries(s.prime, s.exponent, out, s.graded, n)


class IntegerMatrix:
    """Dense matrix with arbitrary-precision integer entries."""

    __slots__ = ("rows", "cols", "entries")

    def __init__(self, rows: int, cols: int, entries):
        if rows < 1 or cols < 1:
            raise ValueError("dimensions must be positive")
        if len(entries) != rows or any(len(r) != cols for r in entries):
            raise ValueError("entry shape mismatch")
        self.rows = rows
        self.cols = cols
        self.entries = [[mpz(x) for x in row] for row in entries]

    @classmethod
    def identity(cls, n: int) -> "IntegerMatrix":
        return cls(n, n, [[1 if i == j else 0 for j in range(n)] for i in range(n)])

    def mul(self, other: "IntegerMatrix", mod: int | None = None) -> "IntegerMatrix":
        if self.cols != other.rows:
            raise ValueError("dimension mismatch")
        a, b = self.entries, other.entries
        n, m, k = self.rows, other.cols, self.cols
        out = []
        for i in range(n):
            ai = a[i]
            row = []
            for j in range(m):
                s = mpz(0)
                for t in range(k):
                    s += ai[t] * b[t][j]
                row.append(s % mod if mod is not None else s)
            out.append(row)
        return IntegerMatrix(n, m, out)

    def reduce(self, mod: int) -> "IntegerMatrix":
        return IntegerMatrix(
            self.rows, self.cols, [[x % mod for x in row] for row in self.entries]
        )

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, IntegerMatrix)
            and self.rows == other.rows
            and self.cols == other.cols
            and self.entries == other.entries
        )

    def __repr__(self) -> str:
        return f"IntegerMatrix({[[int(x) for x in row] for row in self.entries]})"
