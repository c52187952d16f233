"""Spectral, heat-kernel and branching computations for conformally covariant operators on spheres.

Submodules: specfun, sphere_geometry, model_spectra, zeta_heat, conformal_lab,
minrep_branching, flat_model, cli.  The package namespace itself stays light
so that the command-line entry point can set thread counts before numpy loads.
"""
from .errors import (AliasingError, ConditioningError, ConfsymError, ContinuationError, ConvergenceError,
                     DomainError, NormalizationError, ParameterError, ParityError, ResourceError,
                     StepSizeError, VerificationError)

__version__ = "0.1.0"

__all__ = [
    "AliasingError", "ConditioningError", "ConfsymError", "ContinuationError", "ConvergenceError",
    "DomainError", "NormalizationError", "ParameterError", "ParityError", "ResourceError",
    "StepSizeError", "VerificationError", "__version__",
]
