"""Batch command-line driver.

Parses a datum and z, runs the amortized pipeline for all primes up to the
limit, and writes one record per prime (jsonl or csv) in ascending order.
Optionally cross-checks a number of good primes against the direct oracle.
"""

from __future__ import annotations

import csv
import io
import json
import sys
from fractions import Fraction

import click

from .datum import PrimeClass, validate_datum
from .engine import TraceEngine, TraceResult
from .errors import HgmError
from .gammacache import ENV_CACHE_DIR, GammaCache
from .oracle import H_p_direct, OracleConfig

__all__ = ["main", "emit_record"]

_FIELDS = ("p", "class", "e", "residue", "trace", "method")


def _record_dict(result: TraceResult) -> dict:
    cls = result.prime_class
    if cls == PrimeClass.SMALL:
        cls = PrimeClass.GOOD
    return {
        "p": result.p,
        "class": cls,
        "e": result.e,
        "residue": None if result.residue is None else result.residue.value,
        "trace": result.lifted,
        "method": result.method,
    }


def emit_record(result: TraceResult, fmt: str) -> str:
    """One serialized output line (without trailing newline)."""
    rec = _record_dict(result)
    if fmt == "jsonl":
        return json.dumps(rec, separators=(",", ":"))
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="")
        w.writerow(["" if rec[k] is None else rec[k] for k in _FIELDS])
        return buf.getvalue()
    raise ValueError(f"unknown format {fmt!r}")


def _parse_fraction(text: str, what: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise click.ClickException(f"cannot parse {what} {text!r}: {exc}") from exc


def _parse_entries(text: str, what: str):
    return [_parse_fraction(t, what) for t in text.split(",")]


@click.command(name="hgmtrace")
@click.option("--alpha", required=True, help="Comma-separated fractions, e.g. 1/4,3/4.")
@click.option("--beta", required=True, help="Comma-separated fractions, e.g. 1/6,5/6.")
@click.option("--z", "z_text", required=True, help="Rational argument, e.g. 314/159.")
@click.option("--limit", type=int, required=True, help="Upper bound X on the primes.")
@click.option("--precision", type=int, default=None, help="Digits e; default ceil((w+1)/2).")
@click.option("--output", type=click.Path(dir_okay=False), default=None, help="Output file (default stdout).")
@click.option("--format", "fmt", type=click.Choice(["jsonl", "csv"]), default="jsonl", show_default=True)
@click.option("--cache-dir", type=click.Path(file_okay=False), default=None,
              help=f"Gamma-table cache directory (or ${ENV_CACHE_DIR}).")
@click.option("--no-cache", is_flag=True, help="Recompute gamma tables from scratch.")
@click.option("--oracle-check", default=None,
              help="Cross-check this many good primes against the oracle, or 'all'.")
@click.option("--threads", type=int, default=0, help="Worker threads for range jobs.")
@click.option("--phase-timings", is_flag=True, help="Report per-phase wall time on stderr.")
def main(alpha, beta, z_text, limit, precision, output, fmt, cache_dir,
         no_cache, oracle_check, threads, phase_timings):
    """Frobenius traces of a hypergeometric motive for all primes up to a bound."""
    try:
        datum = validate_datum(_parse_entries(alpha, "alpha"), _parse_entries(beta, "beta"))
    except (HgmError, ValueError) as exc:
        raise click.ClickException(str(exc)) from exc
    z = _parse_fraction(z_text, "z")
    if limit < 2:
        raise click.ClickException("--limit must be >= 2")
    if precision is not None and precision < 1:
        raise click.ClickException("--precision must be >= 1")
    cache = None if no_cache else GammaCache(cache_dir)
    try:
        engine = TraceEngine(datum, z, limit, precision, cache=cache, threads=threads)
        results = engine.run()
    except (HgmError, ValueError) as exc:
        raise click.ClickException(str(exc)) from exc

    if oracle_check is not None:
        good = [r for r in results if r.residue is not None]
        if oracle_check == "all":
            count = len(good)
        else:
            try:
                count = int(oracle_check)
            except ValueError as exc:
                raise click.ClickException("--oracle-check takes an integer or 'all'") from exc
            if count < 0 or count > len(good):
                raise click.ClickException(
                    f"--oracle-check {count} exceeds the {len(good)} checkable primes"
                )
        cfg = OracleConfig(max_pe=1 << 33)
        for r in good[:count]:
            want = H_p_direct(engine.datum, engine.z, r.p, r.e, cfg).value
            if want != r.residue.value:
                raise click.ClickException(
                    f"oracle mismatch at p = {r.p}: got {r.residue.value}, oracle {want}"
                )

    lines = [emit_record(r, fmt) for r in results]
    text = "".join(line + "\n" for line in lines)
    if output is None:
        sys.stdout.write(text)
    else:
        with open(output, "w", newline="") as f:
            f.write(text)

    if phase_timings:
        for name, secs in engine.phase_times.items():
            click.echo(f"{name}: {secs:.3f}s", err=True)


if __name__ == "__main__":
    main()
