"""Exception and warning types shared across the package.

Exception class names are deliberately short (no ``Error`` suffix) because the
command-line tools print ``type(exc).__name__`` on stderr and the bare names
double as machine-readable failure codes.
"""

from __future__ import annotations


class SimradError(Exception):
    """Base class for all package-specific errors."""


class ZeroVector(SimradError):
    """A direction vector was too close to zero to normalize."""


class SupportOverflow(SimradError):
    """A synthetic field does not decay to negligible values inside the grid."""


class GeometryMismatch(SimradError):
    """Two operands (or an operand and a sampling geometry) are incompatible."""


class NotAdmissible(SimradError):
    """A candidate wavelet fails the scale-integrability admissibility test."""


class InsufficientCoverage(SimradError):
    """Too many in-band frequency voxels received no sample contribution."""


class LatticeTooCoarse(UserWarning):
    """A discrete group lattice is too coarse for a trustworthy synthesis."""
