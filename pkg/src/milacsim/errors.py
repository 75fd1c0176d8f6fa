"""Exception types raised across the package.

Every error carries a human-readable message; callers that need the
offending quantity (for example the minimum eigenvalue that failed a
positive-definiteness check) will find it in the message text.
"""


class MilacSimError(Exception):
    """Base class for all errors raised by milacsim."""


class NotHermitianError(MilacSimError):
    """Matrix asymmetry exceeds the Hermitian admission tolerance."""


class NotPositiveDefiniteError(MilacSimError):
    """A matrix required to be positive definite has an eigenvalue <= 0."""


class ZeroVectorError(MilacSimError):
    """A direction vector with zero norm cannot be normalized."""


class OutOfRangeError(MilacSimError):
    """A 1-based index range falls outside the matrix dimensions."""


class BadGridError(MilacSimError):
    """Requested antenna count is not divisible into the grid columns."""


class SameAntennaError(MilacSimError):
    """Mutual impedance requested for an antenna with itself."""


class SingularKernelError(MilacSimError):
    """The coupling integrand is singular inside the integration domain."""


class RealPartNotPDError(MilacSimError):
    """Real part of a coupling matrix is not positive definite."""


class DimensionMismatchError(MilacSimError):
    """Matrix dimensions are inconsistent with the scenario counts."""


class SingularCouplingError(MilacSimError):
    """A coupling matrix that must be inverted is numerically singular."""


class SingularSystemError(MilacSimError):
    """A network system matrix is numerically singular."""


class SingularBlockError(MilacSimError):
    """A block that must be inverted in the impedance form is singular."""


class ThetaPlusIdentitySingularError(MilacSimError):
    """I + Theta stayed singular through all phase-rotation retries."""


class BoundMismatchError(MilacSimError):
    """Optimizer output failed to reproduce its closed-form power bound.

    This signals an implementation bug, never an expected runtime state.
    """
