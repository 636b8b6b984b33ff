"""Exception types shared across the package."""


class NcqmError(Exception):
    """Base class for all package-specific errors."""


class OddDimension(NcqmError):
    """Matrix dimension must be even to admit a 2x2 block canonical form."""


class NotAntisymmetric(NcqmError):
    """Symmetrization residual of the input exceeds the tolerance."""


class DegenerateTheta(NcqmError):
    """A sector parameter is zero (or below tolerance); the frame is singular."""


class NotPositiveDefinite(NcqmError):
    """Matrix is not symmetric positive definite within tolerance."""


class DimensionMismatch(NcqmError):
    """Operand dimensions are incompatible."""


class UnsupportedOrder(NcqmError):
    """Moment order outside the implemented range."""


class DivergentStar(NcqmError):
    """The Gaussian quadratic form of a star product lost invertibility."""


class DegreeTooHigh(NcqmError):
    """Polynomial total degree exceeds the supported cap."""


class MismatchedLambda(NcqmError):
    """Two states carry different width matrices (or hbar values)."""


class UnknownOpTag(NcqmError):
    """Unrecognized operator tag for a matrix element."""


class TruncationTooSmall(NcqmError):
    """Basis tail mass beyond the truncation exceeds the threshold."""


class NotInvertibleField(NcqmError):
    """The antisymmetric field matrix is singular; the representation needs its inverse."""


class QuadratureNotConverged(NcqmError):
    """Successive quadrature orders did not agree within tolerance before the cap."""


class FrameMismatch(NcqmError):
    """Two states live on different frames or truncations."""


class NormDriftExceeded(NcqmError):
    """Norm conservation violated beyond the configured tolerance during evolution."""


class NonHermitianHamiltonian(NcqmError):
    """Hamiltonian superoperator failed the hermiticity check."""


class GridTooCoarse(NcqmError):
    """Finite-difference residual is not in the convergent regime on this grid."""
