"""Exception hierarchy for the lqomor package.

All library-level failures derive from :class:`LqoError` so that callers
(and the CLI) can distinguish numerical/contract failures from ordinary
Python errors.  Each subclass carries a short ``category`` string used in
machine-readable error reports.
"""


class LqoError(Exception):
    """Base class for all lqomor errors."""

    category = "error"


class DimensionMismatch(LqoError):
    """Operator/vector dimensions are inconsistent."""

    category = "dimension-mismatch"


class LengthMismatch(LqoError):
    """Two sequences that must have equal length do not."""

    category = "length-mismatch"


class SingularE(LqoError):
    """The descriptor matrix E is singular (infinite eigenvalues)."""

    category = "singular-descriptor"


class SingularShift(LqoError):
    """A shifted operator s*E - A is numerically singular."""

    category = "singular-shift"


class SizeCapExceeded(LqoError):
    """A dense-only operation was requested beyond its size cap."""

    category = "size-cap"


class RepeatedPoles(LqoError):
    """The reduced pencil has (numerically) repeated eigenvalues."""

    category = "repeated-poles"


class NondiagonalizablePencil(LqoError):
    """Eigenvector normalization failed; pencil not diagonalizable."""

    category = "nondiagonalizable"


class RankDeficient(LqoError):
    """A projection basis lost column rank."""

    category = "rank-deficient"


class ConjugacyViolation(LqoError):
    """Interpolation data / spectral data is not closed under conjugation."""

    category = "conjugacy-violation"


class InstabilityDetected(LqoError):
    """An operation requiring asymptotic stability met an unstable model."""

    category = "unstable"


class EigSolverFailure(LqoError):
    """The (sparse or dense) eigensolver failed to deliver usable data."""

    category = "eig-failure"


class AllZeroReference(LqoError):
    """A relative error was requested against an identically zero signal."""

    category = "zero-reference"


class NonFiniteState(LqoError):
    """A time-stepping run produced NaN/Inf states."""

    category = "non-finite"


class InvalidConfig(LqoError):
    """A configuration value is outside its documented domain."""

    category = "invalid-config"
