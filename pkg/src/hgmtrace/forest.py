"""Remainder forest: batched truncated matrix products modulo many prime powers.

Computes C_n = (V.) A_0 ... A_{b_n - 1} mod p_n^{e_n} for a family of primes
with per-prime cut points, by a forest of binary product trees interleaved
with remainder reductions along a modulus-product tree.  `naive_product`
provides the definitional oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from gmpy2 import mpz

from .arith import IntegerMatrix

__all__ = [
    "ExplicitGenerator",
    "PolynomialMatrixGenerator",
    "ForestJob",
    "ForestResult",
    "run_forest",
    "naive_product",
]


class ExplicitGenerator:
    """Generator backed by an explicit list of matrices A_0..A_{b-1}."""

    def __init__(self, matrices: Sequence[IntegerMatrix]):
        self.matrices = list(matrices)
        if self.matrices:
            r, c = self.matrices[0].rows, self.matrices[0].cols
            if any(m.rows != r or m.cols != c for m in self.matrices):
                raise ValueError("generator matrices must share dimensions")
            if r != c:
                raise ValueError("generator matrices must be square")
            self.dim = r
        else:
            self.dim = 1
        self.length: int | None = len(self.matrices)

    def eval(self, k: int) -> IntegerMatrix:
        return self.matrices[k]


class PolynomialMatrixGenerator:
    """Generator A_k given by a square matrix of integer polynomials in k.

    Each entry is a coefficient list (constant first).  `kbase` shifts the
    evaluation point: index k evaluates the polynomials at kbase + k.
    """

    def __init__(self, poly_entries: Sequence[Sequence[Sequence[int]]], kbase: int = 0):
        self.polys = [[list(map(int, p)) for p in row] for row in poly_entries]
        n = len(self.polys)
        if any(len(row) != n for row in self.polys):
            raise ValueError("polynomial matrix must be square")
        self.dim = n
        self.kbase = kbase
        self.length = None  # unbounded

    def eval(self, k: int) -> IntegerMatrix:
        x = self.kbase + k
        out = []
        for row in self.polys:
            out.append([self._horner(pcoeffs, x) for pcoeffs in row])
        return IntegerMatrix(self.dim, self.dim, out)

    @staticmethod
    def _horner(coeffs: Sequence[int], x: int) -> int:
        acc = 0
        for c in reversed(coeffs):
            acc = acc * x + c
        return acc


@dataclass
class ForestJob:
    """Input contract of the remainder forest."""

    generator: object
    primes: Sequence[int]
    cuts: Sequence[int]
    exponent: int | Sequence[int] = 1
    row_selector: IntegerMatrix | None = None

    def __post_init__(self) -> None:
        self.primes = list(self.primes)
        self.cuts = list(self.cuts)
        if len(self.primes) != len(self.cuts):
            raise ValueError("primes and cuts must have equal length")
        if len(set(self.primes)) != len(self.primes):
            raise ValueError("duplicate primes")
        if any(p < 3 or p % 2 == 0 for p in self.primes):
            raise ValueError("primes must be odd primes")
        if isinstance(self.exponent, int):
            self.exponents = [self.exponent] * len(self.primes)
        else:
            self.exponents = list(self.exponent)
        if any(e < 1 for e in self.exponents):
            raise ValueError("exponents must be >= 1")
        if any(c < 0 for c in self.cuts):
            raise ValueError("cut points must be nonnegative")
        b = getattr(self.generator, "length", None)
        if b is not None and any(c > b for c in self.cuts):
            raise ValueError("cut point exceeds generator length")
        if self.row_selector is not None and self.row_selector.cols != self.generator.dim:
            raise ValueError("row selector width mismatch")

    def initial_matrix(self) -> IntegerMatrix:
        if self.row_selector is not None:
            return self.row_selector
        return IntegerMatrix.identity(self.generator.dim)


@dataclass
class ForestResult:
    """Map prime -> reduced prefix product."""

    products: dict = field(default_factory=dict)

    def __getitem__(self, p: int) -> IntegerMatrix:
        return self.products[p]

    def __contains__(self, p: int) -> bool:
        return p in self.products

    def items(self):
        return self.products.items()


def naive_product(job: ForestJob) -> ForestResult:
    """Direct left-to-right per-prime products (test oracle)."""
    res = ForestResult()
    for p, cut, e in zip(job.primes, job.cuts, job.exponents):
        m = p**e
        acc = job.initial_matrix().reduce(m)
        for k in range(cut):
            acc = acc.mul(job.generator.eval(k), m)
        res.products[p] = acc
    return res


class _Runner:
    def __init__(self, job: ForestJob):
        self.gen = job.generator
        self.dim = job.generator.dim
        self.results: dict[int, IntegerMatrix] = {}

    def span(self, lo: int, hi: int, mod: mpz) -> IntegerMatrix:
        """Balanced product A_lo ... A_{hi-1} mod `mod`."""
        if hi - lo == 1:
            return self.gen.eval(lo).reduce(mod)
        mid = (lo + hi) // 2
        return self.span(lo, mid, mod).mul(self.span(mid, hi, mod), mod)

    def walk(self, lo: int, hi: int, c: IntegerMatrix, items: list) -> None:
        """items: (cut, prime, modulus) with lo <= cut <= hi, sorted by cut.

        Invariant: c = (V.) A_0 ... A_{lo-1} reduced mod the product of the
        item moduli.
        """
        idx = 0
        while idx < len(items) and items[idx][0] == lo:
            cut, p, m = items[idx]
            self.results[p] = c.reduce(m)
            idx += 1
        items = items[idx:]
        if not items:
            return
        if hi - lo == 1:
            m_all = _modprod(items)
            c2 = c.mul(self.gen.eval(lo), m_all)
            for cut, p, m in items:
                self.results[p] = c2.reduce(m)
            return
        mid = (lo + hi) // 2
        left = [it for it in items if it[0] <= mid]
        right = [it for it in items if it[0] > mid]
        if left:
            self.walk(lo, mid, c.reduce(_modprod(left)), left)
        if right:
            mr = _modprod(right)
            prefix = self.span(lo, mid, mr)
            self.walk(mid, hi, c.reduce(mr).mul(prefix, mr), right)


def _modprod(items: list) -> mpz:
    acc = mpz(1)
    for _, _, m in items:
        acc *= m
    return acc


def run_forest(job: ForestJob) -> ForestResult:
    """Remainder-forest evaluation of all per-prime prefix products."""
    runner = _Runner(job)
    items = sorted(
        (cut, p, mpz(p) ** e) for p, cut, e in zip(job.primes, job.cuts, job.exponents)
    )
    if items:
        hi = max(1, max(it[0] for it in items))
        c0 = job.initial_matrix().reduce(_modprod(items))
        runner.walk(0, hi, c0, items)
    res = ForestResult()
    res.products = runner.results
    return res
