"""Exception taxonomy.

Every error raised by this package derives from :class:`KronsparseError`.
The CLI maps parse-type errors (file formats, streams) to exit code 2 and
all other domain errors to exit code 1.
"""


class KronsparseError(Exception):
    """Base class for all kronsparse errors."""


class InvalidArgumentError(KronsparseError, ValueError):
    """A caller-supplied value violates a documented precondition."""


class CapacityError(KronsparseError):
    """A composite graph or matrix would exceed supported index capacity."""


class NotBiregularError(KronsparseError):
    """An operation defined only for biregular graphs got a non-biregular one."""


class NumericalError(KronsparseError):
    """A numerical routine (eigensolver/SVD) failed to converge."""


class GenerationExhaustedError(KronsparseError):
    """Rejection sampling hit its attempt cap without an accepted graph."""

    def __init__(self, attempts: int, best_lambda2: float, bound: float):
        self.attempts = attempts
        self.best_lambda2 = best_lambda2
        self.bound = bound
        super().__init__(
            f"no Ramanujan graph in {attempts} attempts "
            f"(best lambda2={best_lambda2:.6g}, bound={bound:.6g})"
        )


class PatternViolationError(KronsparseError):
    """A dense matrix has a nonzero off the structured sparsity pattern."""

    def __init__(self, row: int, col: int, value: float):
        self.row = row
        self.col = col
        super().__init__(f"nonzero {value!r} at ({row}, {col}) is off-pattern")


class ShapeError(KronsparseError, ValueError):
    """Operand shapes or dtypes are incompatible."""


class UnsupportedChainError(KronsparseError):
    """The tiled kernel only multiplies four-factor chains."""


class ConfigurationError(KronsparseError):
    """Tiling parameters violate one or more divisibility constraints."""

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class CertificationError(KronsparseError):
    """A factor required to be Ramanujan failed its spectral certificate."""


class GraphTextError(KronsparseError):
    """Malformed graph text file."""


class ChainFileError(KronsparseError):
    """Malformed chain description file."""


class SerializationError(KronsparseError):
    """Base class for binary stream parse failures."""


class BadMagicError(SerializationError):
    """Stream does not start with the format magic."""


class TruncatedStreamError(SerializationError):
    """Stream ended before the declared payload was complete."""


class ChecksumMismatchError(SerializationError):
    """Trailing checksum does not match the stream contents."""


class PrecisionMismatchError(SerializationError):
    """Stream precision differs from the precision the caller required."""
