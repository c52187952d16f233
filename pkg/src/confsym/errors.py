"""Exception types shared across the package."""


class ConfsymError(Exception):
    """Base class for all errors raised by confsym."""


class DomainError(ConfsymError, ValueError):
    """Argument outside the mathematical domain of a function."""


class ParameterError(ConfsymError, ValueError):
    """Parameter combination violates an operation's precondition."""


class ParityError(ParameterError):
    """Parity condition on group signature or spectral parameter fails."""


class AliasingError(ConfsymError):
    """A sampled function carries energy beyond the requested band limit."""


class ResourceError(ConfsymError):
    """Requested construction exceeds a configured size cap."""


class ConvergenceError(ConfsymError):
    """An iterative or summation procedure did not reach its tolerance."""


class ContinuationError(ConfsymError):
    """The spectrum does not admit the polynomial zeta continuation."""


class ConditioningError(ConfsymError):
    """A least-squares design is numerically rank deficient."""


class NormalizationError(ConfsymError, ValueError):
    """An input violates a required normalization."""


class StepSizeError(ConfsymError):
    """Finite-difference step is outside its asymptotic regime."""


class VerificationError(ConfsymError):
    """A mathematical verification produced a mismatch."""
