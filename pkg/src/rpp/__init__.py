"""Numerical toolkit for Brownian motion in a renormalized Poisson potential.

Special functions and Riesz-kernel integrals, smooth kernel cutoffs, Poisson
fields and Campbell identities, grid potentials, variational constants and
principal eigenvalues, Feynman-Kac Monte Carlo, large-deviation checks, and
a command-line harness that runs and reports the verification experiments.
"""

__version__ = "0.1.0"

from .errors import (ConvergenceError, DomainError, GeometryError, RegimeError, RPPError,
                     SingularityError)

__all__ = ["__version__", "RPPError", "DomainError", "ConvergenceError", "SingularityError",
           "GeometryError", "RegimeError"]
