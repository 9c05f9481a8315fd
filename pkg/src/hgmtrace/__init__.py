"""Amortized computation of hypergeometric-motive Frobenius traces mod p^e."""

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
    parse_datum_text,
    validate_datum,
    zigzag,
)
from .engine import (
    TraceEngine,
    TraceResult,
    assemble_trace,
    hypergeometric_traces,
    lift_trace,
)
from .errors import (
    AmbiguousLift,
    DenominatorCollision,
    DisjointnessViolation,
    GaloisStabilityViolation,
    HgmError,
    LengthMismatch,
)
from .forest import ForestJob, ForestResult, run_forest
from .gamma import gamma_expansion_tables
from .gammacache import GammaCache
from .oracle import H_p_direct, OracleConfig, gamma_p_direct, pochhammer_star

__version__ = "0.1.0"

__all__ = [
    "AmbiguousLift",
    "DenominatorCollision",
    "DisjointnessViolation",
    "ForestJob",
    "ForestResult",
    "GaloisStabilityViolation",
    "GammaCache",
    "H_p_direct",
    "HgmError",
    "HypergeometricDatum",
    "IntegerMatrix",
    "LengthMismatch",
    "OracleConfig",
    "PrimeClass",
    "ResidueElement",
    "TraceEngine",
    "TraceResult",
    "TruncatedSeries",
    "assemble_trace",
    "classify_prime",
    "fraction_mod",
    "gamma_expansion_tables",
    "gamma_p_direct",
    "hypergeometric_traces",
    "lift_trace",
    "padic_exp",
    "padic_log",
    "parse_datum_text",
    "pochhammer_star",
    "run_forest",
    "teichmuller_lift",
    "validate_datum",
    "zigzag",
]
