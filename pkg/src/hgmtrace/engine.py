"""The amortized trace pipeline.

For a datum (alpha, beta), a rational z, and a bound X, computes
H_p mod p^e for every good prime p <= X.  The sum over m is split at the
breakpoints; each open range contributes through a remainder-forest product
of small polynomial matrices, each breakpoint through a per-prime scalar.
Small good primes fall back to the definitional oracle.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

from gmpy2 import invert, mpz, powmod

from .arith import (
    IntegerMatrix,
    ResidueElement,
    TruncatedSeries,
    fraction_mod,
    padic_exp,
    padic_log,
    teichmuller_lift,
)
from .datum import (
    HypergeometricDatum,
    PrimeClass,
    classify_prime,
    range_constants,
    range_geometry,
    small_prime_threshold,
)
from .errors import AmbiguousLift, DenominatorCollision
from .forest import ForestJob, PolynomialMatrixGenerator, run_forest
from .gamma import GammaTables, gamma_expansion_tables
from .oracle import OracleConfig, H_p_direct
from .primes import primes_up_to

__all__ = [
    "GammaBank",
    "RangeJob",
    "TraceResult",
    "build_range_matrix",
    "run_ranges",
    "compute_Pmi",
    "compute_cih",
    "assemble_trace",
    "lift_trace",
    "hypergeometric_traces",
    "TraceEngine",
]


# ---------------------------------------------------------------------------
# gamma table access across denominators


class GammaBank:
    """Expansion tables for every denominator a pipeline needs."""

    def __init__(
        self,
        denominators,
        e: int,
        X: int,
        cache=None,
        use_reflection: bool = True,
    ):
        self.e = e
        self.X = X
        denoms = set(int(d) for d in denominators) | {1}
        self.tables: dict[int, GammaTables] = {
            d: gamma_expansion_tables(d, e, X, cache=cache, use_reflection=use_reflection)
            for d in sorted(denoms)
        }

    def expansion(self, theta: Fraction, p: int):
        theta = Fraction(theta)
        if not 0 < theta <= 1:
            raise KeyError(f"theta {theta} outside (0, 1]")
        return self.tables[theta.denominator].expansion(theta, p)

    def log_zero_coeffs(self, p: int) -> tuple:
        """y-coefficients (degree 1..e-1) of log Gamma_p(py)."""
        if self.e < 2:
            return ()
        return self.tables[1].log_zero[p].coeffs


def _graded_from_y_coeffs(coeffs, p: int, e_i: int, e: int) -> TruncatedSeries:
    """Series in y (coefficient h divisible by p^h) -> graded series in x = py."""
    out = [0]
    for h in range(1, e_i):
        c = coeffs[h] if h < len(coeffs) else 0
        out.append((c % p**e) // p**h)
    return TruncatedSeries(p, e_i, out, graded=True)


def _gamma_graded_series(bank: GammaBank, theta: Fraction, p: int, e_i: int) -> TruncatedSeries:
    """Graded series of Gamma_p(x + theta) in x, for theta in (0, 2]."""
    pei = p**e_i
    factors: list[TruncatedSeries] = []
    while theta > 1:
        theta -= 1
        # Gamma_p(x + theta + 1) = -(x + theta) Gamma_p(x + theta)
        factors.append(
            TruncatedSeries(p, e_i, [-fraction_mod(theta, pei), -1], graded=True)
        )
    ex = bank.expansion(theta, p)
    ser = _graded_from_y_coeffs(ex.s.coeffs, p, e_i, bank.e).exp().scale(ex.c.value)
    for f in factors:
        ser = ser * f
    return ser


def _gamma_value_at(
    bank: GammaBank, theta: Fraction, xval: int, p: int, e: int
) -> ResidueElement:
    """Gamma_p(xval + theta) mod p^e for xval = 0 mod p and theta in (-2, 1]."""
    pe = p**e
    div = 1
    while theta <= 0:
        if theta == 0:
            coeffs = (0,) + bank.log_zero_coeffs(p)
            s = TruncatedSeries(p, e, coeffs, order=e)
            val = padic_exp(s.evaluate(xval // p)).value
            return ResidueElement(p, e, val * int(invert(div, pe)))
        div = div * (-(xval + fraction_mod(theta, pe))) % pe
        theta += 1
    ex = bank.expansion(theta, p)
    s = TruncatedSeries(p, e, ex.s.coeffs, order=e)
    val = ex.c.value * padic_exp(s.evaluate(xval // p)).value % pe
    return ResidueElement(p, e, val * int(invert(div, pe)))


# ---------------------------------------------------------------------------
# per-(range, class) plan


@dataclass
class RangeJob:
    """Everything shared by all primes of one (range, residue class) pair."""

    i: int
    c: int
    b_i: int
    gamma_i: Fraction
    gamma_next: Fraction
    gamma_ic: Fraction
    sigma_bar: int
    e_i: int
    tau_bar: int
    e_prime_i: int
    p_args: list = field(default_factory=list)  # (theta in (-2,1], is_numerator)
    c_args: list = field(default_factory=list)  # (theta in (0,2], is_numerator)
    generator: PolynomialMatrixGenerator | None = None
    row_selector: IntegerMatrix | None = None


def _poly_mul_frac(a, b):
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] += x * y
    return out


def _poly_add(a, b):
    n = max(len(a), len(b))
    return [
        (a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0) for i in range(n)
    ]


def _poly_scale(a, c):
    return [x * c for x in a]


def _poly_pow(a, n):
    out = [Fraction(1)]
    for _ in range(n):
        out = _poly_mul_frac(out, a)
    return out


def build_range_matrix(datum: HypergeometricDatum, i: int, c: int, e_i: int, z: Fraction):
    """Polynomial matrix A(k) (2e_i x 2e_i) and the row selector of its forest.

    The bottom-right block holds the x-series coefficients of
    z * f(k+x) / g(k+x); the bottom-left diagonal carries
    sigma * (k - gamma_ic)^(e_i - 1 - t); the top-left is the clearing
    scalar times the identity.  All entries are integer polynomials in k.
    """
    geo = range_geometry(datum, i, c)
    sigma = _sigma_sign(datum, i)
    z = Fraction(z)
    zf, zg = z.numerator, z.denominator

    # f(k+x), g(k+x) as x-coefficient lists of k-polynomials, truncated at e_i
    def shifted_product(values):
        acc = [[Fraction(1)]]  # acc[xdeg] = k-poly
        for h in values:
            nxt = [[Fraction(0)] for _ in range(min(len(acc) + 1, e_i))]
            for xd, poly in enumerate(acc):
                lin = _poly_mul_frac(poly, [h, Fraction(1)])  # *(h + k)
                nxt[xd] = _poly_add(nxt[xd], lin)
                if xd + 1 < e_i:
                    nxt[xd + 1] = _poly_add(nxt[xd + 1], poly)  # *x
            acc = nxt
        while len(acc) < e_i:
            acc.append([Fraction(0)])
        return acc

    f_x = shifted_product([geo.h[g] for g in datum.alpha])
    g_x = shifted_product([geo.h[g] for g in datum.beta])
    g0 = g_x[0]
    # series inverse numerators: 1/g(k+x) = sum_n u_n x^n / g0^{n+1}
    u = [[Fraction(1)]]
    for n in range(1, e_i):
        s = [Fraction(0)]
        for m in range(1, n + 1):
            term = _poly_mul_frac(g_x[m], u[n - m])
            term = _poly_mul_frac(term, _poly_pow(g0, m - 1))
            s = _poly_add(s, term)
        u.append(_poly_scale(s, Fraction(-1)))

    n2 = 2 * e_i
    entries = [[[Fraction(0)] for _ in range(n2)] for _ in range(n2)]
    top = _poly_scale(_poly_pow(g0, e_i), Fraction(zg))
    for t in range(e_i):
        entries[t][t] = top
        # bottom-left diagonal
        bl = _poly_pow([-geo.gamma_ic, Fraction(1)], e_i - 1 - t)
        entries[e_i + t][t] = _poly_scale(_poly_mul_frac(bl, _poly_pow(g0, e_i)), Fraction(sigma * zg))
    for h1 in range(e_i):
        for h2 in range(h1 + 1):
            t = h1 - h2
            acc = [Fraction(0)]
            for b in range(t + 1):
                a = t - b
                term = _poly_mul_frac(f_x[a], u[b])
                term = _poly_mul_frac(term, _poly_pow(g0, e_i - 1 - b))
                acc = _poly_add(acc, term)
            entries[e_i + h1][e_i + h2] = _poly_scale(acc, Fraction(zf))

    # clear rational denominators, then strip integer content
    lcm = 1
    for row in entries:
        for poly in row:
            for coef in poly:
                lcm = lcm * coef.denominator // math.gcd(lcm, coef.denominator)
    ints = [[[coef * lcm for coef in poly] for poly in row] for row in entries]
    content = 0
    for row in ints:
        for poly in row:
            for coef in poly:
                assert coef.denominator == 1
                content = math.gcd(content, abs(int(coef)))
    content = content or 1
    final = [[[int(coef) // content for coef in poly] for poly in row] for row in ints]
    gen = PolynomialMatrixGenerator(final, kbase=1)
    v_rows = e_i + 1
    v = IntegerMatrix(
        v_rows, n2, [[1 if cdx == e_i - 1 + rdx else 0 for cdx in range(n2)] for rdx in range(v_rows)]
    )
    return gen, v


def _sigma_sign(datum: HypergeometricDatum, i: int) -> int:
    from .datum import zigzag

    return (-1) ** (zigzag(datum, datum.breakpoints[i]) % 2)


def make_range_jobs(
    datum: HypergeometricDatum, z: Fraction, e: int, use_row_selector: bool = True
) -> list[RangeJob]:
    """One RangeJob per (breakpoint range, residue class)."""
    jobs = []
    for i in range(datum.s):
        gamma_i = datum.breakpoints[i]
        b_i = gamma_i.denominator
        classes = [c for c in range(b_i) if math.gcd(c, b_i) == 1] if b_i > 1 else [0]
        for c in classes:
            geo = range_geometry(datum, i, c)
            rc = range_constants(datum, e, i, c)
            job = RangeJob(
                i=i,
                c=c,
                b_i=b_i,
                gamma_i=gamma_i,
                gamma_next=datum.breakpoints[i + 1],
                gamma_ic=geo.gamma_ic,
                sigma_bar=rc.sigma_bar,
                e_i=rc.e_i,
                tau_bar=rc.tau_bar,
                e_prime_i=rc.e_prime_i,
            )
            for g in datum.alpha:
                job.p_args.append((geo.h[g] - geo.eps[g], True))
                job.c_args.append((geo.h[g] + 1, True))
            for g in datum.beta:
                job.p_args.append((geo.h[g] - geo.eps[g], False))
                job.c_args.append((geo.h[g] + 1, False))
            if rc.sigma_bar != 0:
                gen, v = build_range_matrix(datum, i, c, rc.e_i, z)
                job.generator = gen
                job.row_selector = v if use_row_selector else None
            jobs.append(job)
    return jobs


def needed_denominators(jobs: list[RangeJob], datum: HypergeometricDatum) -> set[int]:
    dens = {1}
    for g in datum.alpha + datum.beta:
        if g != 0:
            dens.add(g.denominator)
    for job in jobs:
        for theta, _ in job.p_args:
            while theta <= 0:
                theta += 1
            dens.add(theta.denominator)
        for theta, _ in job.c_args:
            while theta > 1:
                theta -= 1
            dens.add(theta.denominator)
    return dens


# ---------------------------------------------------------------------------
# per-prime scalar data


@dataclass
class PrimeScalars:
    p: int
    pe: int
    m: list  # m_i for every breakpoint
    tz: int  # Teichmuller lift of z
    zbar: int  # z mod p^e
    lam: int  # log([z]/z) mod p^e
    inv_base: int  # inverse of the base Gamma product
    inv_one_minus_p: int


def prime_scalars(
    datum: HypergeometricDatum, z: Fraction, e: int, p: int, bank: GammaBank
) -> PrimeScalars:
    pe = p**e
    tz = teichmuller_lift(z, p, e).value
    zbar = fraction_mod(z, pe)
    lam = padic_log(ResidueElement(p, e, tz * int(invert(zbar, pe)))).value
    base = 1
    for g in datum.alpha:
        base = base * (1 if g == 0 else bank.expansion(g, p).c.value) % pe
    for g in datum.beta:
        v = 1 if g == 0 else bank.expansion(g, p).c.value
        base = base * int(invert(v, pe)) % pe
    m = [math.floor(g * (p - 1)) for g in datum.breakpoints]
    return PrimeScalars(
        p, pe, m, tz, zbar, lam, int(invert(base, pe)), int(invert(1 - p, pe))
    )


def compute_Pmi(
    job: RangeJob, sc: PrimeScalars, bank: GammaBank, e: int
) -> ResidueElement:
    """P_{m_i} mod p^e: [z]^{m_i} times the Gamma product over the base."""
    p, pe = sc.p, sc.pe
    m_i = sc.m[job.i]
    x0 = (-job.gamma_ic.numerator * p) * int(
        invert(job.gamma_ic.denominator * (1 - p), pe)
    ) % pe
    val = int(powmod(sc.tz, m_i, pe))
    for theta, is_num in job.p_args:
        g = _gamma_value_at(bank, theta, x0, p, e).value
        val = val * (g if is_num else int(invert(g, pe))) % pe
    return ResidueElement(p, e, val * sc.inv_base)


def compute_cih(
    job: RangeJob, sc: PrimeScalars, bank: GammaBank, e: int
) -> TruncatedSeries:
    """Graded coefficients c_{i,h}(p) of the interior-term series in x."""
    p, e_i = sc.p, job.e_i
    pe, pei = sc.pe, p**e_i
    m_i = sc.m[job.i]
    const = (m_i + job.gamma_ic) * sc.lam
    pre = (
        int(powmod(sc.zbar, m_i + 1, pe))
        * padic_exp(ResidueElement(p, e, fraction_mod(const, pe))).value
        % pe
        * sc.inv_base
        % pe
    )
    ser = TruncatedSeries(p, e_i, [pre], graded=True)
    if e_i >= 2 and sc.lam % pe:
        mu = (sc.lam // p) * (1 - p)
        ser = ser * TruncatedSeries(p, e_i, [0, mu], graded=True).exp()
    for theta, is_num in job.c_args:
        gser = _gamma_graded_series(bank, theta, p, e_i)
        ser = ser * (gser if is_num else gser.inverse())
    return ser


def run_ranges(
    jobs: list[RangeJob],
    datum: HypergeometricDatum,
    primes: list[int],
    threads: int = 0,
) -> dict:
    """Forest products S_i(p) for every (range, class) with a nonzero sigma."""
    results = {}
    tasks = []
    for job in jobs:
        if job.generator is None:
            continue
        ps, cuts = [], []
        for p in primes:
            if job.b_i > 1 and p % job.b_i != job.c:
                continue
            gap = math.floor(job.gamma_next * (p - 1)) - math.floor(job.gamma_i * (p - 1))
            if gap < 2:
                continue
            ps.append(p)
            cuts.append(gap - 1)
        if not ps:
            continue
        fj = ForestJob(job.generator, ps, cuts, job.e_i, row_selector=job.row_selector)
        tasks.append(((job.i, job.c), fj))
    if threads and threads > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            futs = {key: ex.submit(run_forest, fj) for key, fj in tasks}
        for key, fut in futs.items():
            results[key] = fut.result()
    else:
        for key, fj in tasks:
            results[key] = run_forest(fj)
    return results


def assemble_trace(
    datum: HypergeometricDatum,
    z: Fraction,
    e: int,
    p: int,
    jobs: list[RangeJob],
    forests: dict,
    bank: GammaBank,
    sc: PrimeScalars | None = None,
) -> ResidueElement:
    """H_p mod p^e from the per-range pieces."""
    if sc is None:
        sc = prime_scalars(datum, z, e, p, bank)
    pe = sc.pe
    acc = 0
    for job in jobs:
        if job.b_i > 1 and p % job.b_i != job.c:
            continue
        if job.tau_bar != 0:
            pmi = compute_Pmi(job, sc, bank, e).value
            acc = (acc + job.tau_bar * p ** (e - job.e_prime_i) * pmi) % pe
        if job.sigma_bar == 0:
            continue
        gap = sc.m[job.i + 1] - sc.m[job.i]
        if gap < 2:
            continue
        e_i = job.e_i
        pei = p**e_i
        smat = forests[(job.i, job.c)][p]
        if job.row_selector is not None:
            delta = int(smat.entries[0][e_i - 1])
            sbl = [[int(smat.entries[1 + h1][h2]) for h2 in range(e_i)] for h1 in range(e_i)]
        else:
            delta = int(smat.entries[0][0])
            sbl = [[int(smat.entries[e_i + h1][h2]) for h2 in range(e_i)] for h1 in range(e_i)]
        if delta % p == 0:
            raise DenominatorCollision(f"forest scalar not a unit at p = {p}, range {job.i}")
        cser = compute_cih(job, sc, bank, e)
        xunit = p * int(invert(1 - p, pei)) % pei  # p/(1-p)
        wvec = [int(powmod(xunit, e_i - 1 - h2, pei)) for h2 in range(e_i)]
        vvec = [cser.coeffs[e_i - 1 - h1] if e_i - 1 - h1 < len(cser.coeffs) else 0 for h1 in range(e_i)]
        tot = 0
        for h1 in range(e_i):
            if vvec[h1] == 0:
                continue
            row = sbl[h1]
            s = 0
            for h2 in range(e_i):
                s += row[h2] * wvec[h2]
            tot = (tot + vvec[h1] * s) % pei
        tot = tot * int(invert(delta, pei)) % pei
        acc = (acc + p ** (e - e_i) * tot) % pe
    return ResidueElement(p, e, acc * sc.inv_one_minus_p)


def lift_trace(residue: ResidueElement, r: int, w: int):
    """Unique integer t = residue mod p^e with t^2 <= r^2 p^w, if it exists."""
    p, e = residue.prime, residue.exponent
    if e != (w + 1 + 1) // 2:
        return None
    pe = p**e
    bound = math.isqrt(r * r * p**w)
    t0 = residue.value % pe
    kmin = -((t0 + bound) // pe)
    kmax = (bound - t0) // pe
    candidates = [t0 + k * pe for k in range(kmin, kmax + 1)]
    if len(candidates) > 1:
        raise AmbiguousLift(f"multiple lifts {candidates} for residue {t0} mod {pe}")
    return candidates[0] if candidates else None


# ---------------------------------------------------------------------------
# driver


@dataclass
class TraceResult:
    p: int
    prime_class: str
    e: int | None = None
    residue: ResidueElement | None = None
    lifted: int | None = None
    method: str | None = None


class TraceEngine:
    """End-to-end runner with phase timing."""

    def __init__(
        self,
        datum: HypergeometricDatum,
        z: Fraction,
        X: int,
        e: int | None = None,
        cache=None,
        use_reflection: bool = True,
        use_row_selector: bool = True,
        threads: int = 0,
    ):
        z = Fraction(z)
        if z == 0 or z == 1:
            raise ValueError("z must avoid 0 and 1")
        if X < 2:
            raise ValueError("X must be >= 2")
        self.swapped = Fraction(0) in datum.alpha
        if self.swapped:
            datum, z = datum.swapped(), 1 / z
        self.datum = datum
        self.z = z
        self.X = X
        self.e = e if e is not None else (datum.weight + 2) // 2
        self.cache = cache
        self.use_reflection = use_reflection
        self.use_row_selector = use_row_selector
        self.threads = threads
        self.phase_times: dict[str, float] = {}

    def run(self) -> list[TraceResult]:
        datum, z, e, X = self.datum, self.z, self.e, self.X
        threshold = small_prime_threshold(datum, e)
        all_primes = primes_up_to(X)
        amortized = [
            p
            for p in all_primes
            if p > threshold and classify_prime(datum, z, p, e) == PrimeClass.GOOD
        ]

        t0 = time.perf_counter()
        jobs = make_range_jobs(datum, z, e, self.use_row_selector)
        bank = GammaBank(
            needed_denominators(jobs, datum),
            e,
            X,
            cache=self.cache,
            use_reflection=self.use_reflection,
        )
        self.phase_times["phase1_gamma_tables"] = time.perf_counter() - t0

        t0 = time.perf_counter()
        scalars = {p: prime_scalars(datum, z, e, p, bank) for p in amortized}
        self.phase_times["phase2_prime_precomp"] = time.perf_counter() - t0

        t0 = time.perf_counter()
        forests = run_ranges(jobs, datum, amortized, self.threads)
        results = []
        oracle_cfg = OracleConfig(max_pe=1 << 33)
        for p in all_primes:
            cls = classify_prime(datum, z, p, e)
            if cls in (PrimeClass.WILD, PrimeClass.TAME):
                results.append(TraceResult(p, cls))
                continue
            if cls == PrimeClass.SMALL:
                res = H_p_direct(datum, z, p, e, oracle_cfg)
                lifted = _try_lift(res, datum)
                results.append(TraceResult(p, cls, e, res, lifted, "oracle"))
                continue
            res = assemble_trace(datum, z, e, p, jobs, forests, bank, scalars[p])
            lifted = _try_lift(res, datum)
            results.append(TraceResult(p, cls, e, res, lifted, "amortized"))
        self.phase_times["phase3_forests_assembly"] = time.perf_counter() - t0
        return results


def _try_lift(res: ResidueElement, datum: HypergeometricDatum):
    try:
        return lift_trace(res, datum.r, datum.weight)
    except AmbiguousLift:
        return None


def hypergeometric_traces(
    datum: HypergeometricDatum,
    z: Fraction,
    X: int,
    e: int | None = None,
    **kwargs,
) -> list[TraceResult]:
    """Results for all primes p <= X, ascending."""
    return TraceEngine(datum, z, X, e, **kwargs).run()
