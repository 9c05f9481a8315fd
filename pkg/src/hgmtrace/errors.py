"""Exception types shared across the package."""


class HgmError(Exception):
    """Base class for all package-specific errors."""


class DisjointnessViolation(HgmError):
    """The two parameter tuples share a common entry."""


class GaloisStabilityViolation(HgmError):
    """Reduced fractions with equal denominator do not occur with equal multiplicity."""


class LengthMismatch(HgmError):
    """The two parameter tuples have different lengths."""


class DenominatorCollision(HgmError):
    """A scalar that must be a p-adic unit turned out divisible by p."""


class AmbiguousLift(HgmError):
    """Two integers within the trace bound share the same residue."""
