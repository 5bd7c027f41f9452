"""Exception hierarchy.

Each family corresponds to one documented CLI exit code (see cli.EXIT_CODES).
"""


class DaviesGapError(Exception):
    """Base class for all package errors."""


class MalformedDocument(DaviesGapError):
    """Input document does not conform to the instance schema."""


class DegenerateSpectrum(DaviesGapError):
    """Two energies closer than the degeneracy tolerance."""


class NonHermitianCoupling(DaviesGapError):
    """A coupling matrix fails the Hermiticity check."""


class EmptyCouplings(DaviesGapError):
    """No couplings given, or none with an off-diagonal element."""


class UnknownBathKind(DaviesGapError):
    """Bath kind not one of the supported models."""


class MissingBathFrequency(DaviesGapError):
    """Tabulated bath queried at a frequency it does not cover."""


class UnknownFrequency(DaviesGapError):
    """Requested Bohr frequency is not part of the index."""


class DimensionOverflow(DaviesGapError):
    """Dense superoperator requested above the configured dimension limit."""


class NotPrimitive(DaviesGapError):
    """Stationary state is not unique (degenerate zero eigenvalue)."""


class InvalidState(DaviesGapError):
    """Initial state is not a valid density matrix."""


class Disconnected(DaviesGapError):
    """Classical transition graph is not connected."""


class VertexNotInTree(DaviesGapError):
    """Fill-weight root is not a vertex of the tree."""


class KernelMismatch(DaviesGapError):
    """ker(B) is not contained in ker(A); support number undefined."""


class SingularVariance(DaviesGapError):
    """Variance block has a non-positive diagonal entry."""


class DegenerateNormalization(DaviesGapError):
    """Tree-bound normalizing constant vanishes on a nonempty block."""


class NoValidBound(DaviesGapError):
    """Every quantum bound degenerated; no combined lower bound exists."""


class InvalidArguments(DaviesGapError):
    """Arguments outside the documented domain of an operation."""


class ConfigError(DaviesGapError):
    """Sweep or CLI configuration is invalid."""
