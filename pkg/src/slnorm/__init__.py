"""Forward Sturm-Liouville solver for -y'' + q y = mu y on [0, pi] with Robin conditions.

Eigenvalues, eigenfunctions and norming constants, plus numerical checks
of the identities that tie them together.
"""

from .errors import (AccuracyError, ConfigError, DegenerateSamplingError, DomainError, IntegrationError,
                     SearchError, SLNormError)
from .ivp import BoundaryParams, SolutionSample, solve_phi, solve_phi_with_mu_derivative, solve_psi
from .norming import NormingSet, compute_norming
from .potential import Potential
from .spectrum import EigenRecord, SpectralData, characteristic_phi, characteristic_psi, find_eigenvalues

__version__ = "0.1.0"

__all__ = [
    "AccuracyError", "BoundaryParams", "ConfigError", "DegenerateSamplingError", "DomainError", "EigenRecord",
    "IntegrationError", "NormingSet", "Potential", "SLNormError", "SearchError", "SolutionSample", "SpectralData",
    "characteristic_phi", "characteristic_psi", "compute_norming", "find_eigenvalues", "solve_phi",
    "solve_phi_with_mu_derivative", "solve_psi",
]
