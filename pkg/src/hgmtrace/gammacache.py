"""On-disk binary cache for Gamma_p expansion tables.

One file per (d, e, X, residue class).  Layout (all little-endian):
magic "HGMG", u32 version, u32 d, u32 e, u64 X, u32 class, u64 prime count;
then per prime: u64 p, and for each numerator of the table (sorted order)
a value block for c followed by e-1 coefficient blocks for s (degrees
1..e-1).  A value block is u32 byte-length + that many little-endian bytes.
The format is bit-exact across platforms.
"""

from __future__ import annotations

import math
import os
import struct
import tempfile
from fractions import Fraction
from pathlib import Path

from .arith import ResidueElement, TruncatedSeries

_MAGIC = b"HGMG"
_VERSION = 1

ENV_CACHE_DIR = "HGMTRACE_CACHE_DIR"


def default_cache_dir() -> Path:
    env = os.environ.get(ENV_CACHE_DIR)
    if env:
        return Path(env)
    return Path.home() / ".cache" / "hgmtrace"


def _numerators(d: int) -> list[int]:
    if d == 1:
        return [1]
    return [a for a in range(1, d) if math.gcd(a, d) == 1]


def _write_block(buf: bytearray, value: int) -> None:
    raw = value.to_bytes((value.bit_length() + 7) // 8 or 1, "little")
    buf += struct.pack("<I", len(raw))
    buf += raw


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, fmt: str):
        vals = struct.unpack_from(fmt, self.data, self.pos)
        self.pos += struct.calcsize(fmt)
        return vals

    def block(self) -> int:
        (n,) = self.take("<I")
        raw = self.data[self.pos : self.pos + n]
        self.pos += n
        return int.from_bytes(raw, "little")


class GammaCache:
    """Content store for expansion tables; single-writer, multi-reader."""

    def __init__(self, directory: str | os.PathLike | None = None):
        self.directory = Path(directory) if directory is not None else default_cache_dir()

    def _path(self, d: int, e: int, X: int, c: int) -> Path:
        return self.directory / f"gamma_d{d}_e{e}_X{X}_c{c}.bin"

    def store(self, d: int, e: int, X: int, c: int, part) -> None:
        from .gamma import GammaExpansion  # local to avoid cycle

        expansions, _log_zero = part
        primes = sorted({p for (_, p) in expansions})
        nums = _numerators(d)
        buf = bytearray()
        buf += _MAGIC
        buf += struct.pack("<III Q I Q", _VERSION, d, e, X, c, len(primes))
        for p in primes:
            buf += struct.pack("<Q", p)
            for a in nums:
                ex = expansions[(a, p)]
                _write_block(buf, ex.c.value)
                coeffs = list(ex.s.coeffs) + [0] * e
                for h in range(1, e):
                    _write_block(buf, coeffs[h])
        self.directory.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=self.directory, suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as f:
                f.write(bytes(buf))
            os.replace(tmp, self._path(d, e, X, c))
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    def load(self, d: int, e: int, X: int, c: int):
        from .gamma import GammaExpansion, LogGammaAtZero

        path = self._path(d, e, X, c)
        if not path.exists():
            return None
        data = path.read_bytes()
        if data[:4] != _MAGIC:
            return None
        r = _Reader(data[4:])
        version, fd_, fe, fx, fc, count = r.take("<III Q I Q")
        if (version, fd_, fe, fx, fc) != (_VERSION, d, e, X, c):
            return None
        expansions = {}
        log_zero = {}
        nums = _numerators(d)
        for _ in range(count):
            (p,) = r.take("<Q")
            p = int(p)
            for a in nums:
                cval = r.block()
                coeffs = [0] + [r.block() for _ in range(1, e)]
                s = TruncatedSeries(p, e, coeffs, order=e)
                expansions[(a, p)] = GammaExpansion(
                    Fraction(a, d), p, e, ResidueElement(p, e, cval), s
                )
            if d == 1 and e >= 2:
                ex = expansions[(1, p)]
                log_zero[p] = LogGammaAtZero(p, e, tuple(ex.s.coeffs[1:e]))
        return expansions, log_zero
