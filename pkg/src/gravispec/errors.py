"""Exception hierarchy shared across the package."""


class GravispecError(Exception):
    """Base class for all package-specific errors."""


class DegenerateDenominator(GravispecError):
    """Two poles coincide within the clustering tolerance and the caller
    did not request multiple-pole handling."""


class NonProperTerm(GravispecError):
    """A term has a polynomial part; its time-domain support is
    distributional at t = 0 and causal-part extraction is ill-defined."""


class SlowDecay(GravispecError):
    """Integrand tail decays slower than 1/omega^2 (or 1/omega for a
    delayed term); the real-line integral does not exist / converge."""


class QuadratureNotConverged(GravispecError):
    """Adaptive quadrature error estimate exceeds the requested tolerance."""


class RootSignAmbiguity(GravispecError):
    """Square-root branch selection cannot satisfy Re(beta) > 0, Im(beta) < 0."""


class NegativeSpectrum(GravispecError):
    """Input spectrum is negative somewhere on the sampled real-frequency grid."""


class DegenerateQuadrature(GravispecError):
    """Homodyne angle zeta = 0: position signal absent from the measured
    quadrature, the stationary estimator formula is degenerate."""


class UnstableLoop(GravispecError):
    """Simulated state norm diverged (time step too coarse or invalid params)."""
