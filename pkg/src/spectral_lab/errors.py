"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class SpectralLabError(Exception):
    """Base class for every error raised by this package."""


class NonConvergence(SpectralLabError):
    """Root finder missed its residual target within the iteration budget."""


class AmbiguousClustering(SpectralLabError):
    """Eigenvalue multiplicities cannot be decided reliably at this tolerance."""


class Singular(SpectralLabError):
    """A matrix that must be inverted is numerically singular."""


class DegenerateDenominator(SpectralLabError):
    """The f_lambda denominator vanished at an evaluation node."""


class OutsideBall(SpectralLabError):
    """A point or matrix left the region where a bound is valid."""


class NoFeasibleDisc(SpectralLabError):
    """Disc search found no disc meeting the interpolation and membership checks."""


class NotCyclic(SpectralLabError):
    """An endpoint that must be cyclic (non-derogatory) is not."""


class InconsistentSandwich(SpectralLabError):
    """A lower bound exceeded an upper bound on the same space."""


class NotSingleEigenvalue(SpectralLabError):
    """The matrix has more than one eigenvalue cluster."""


class ThetaViolated(SpectralLabError):
    """A disc fails the derivative-vanishing conditions needed for lifting."""


class DegenerateInput(SpectralLabError):
    """A construction parameter makes the requested object trivial."""


class CertificateFailed(SpectralLabError):
    """A certificate could not establish its strict inequality."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class ChainInconclusive(CertificateFailed):
    """The Green/Lempert chain gap fell below the requested margin."""
