"""Long-time homogenization of wave propagation in periodic media.

The package computes dispersion coefficients from the Bloch cell problem,
builds the well-posed weakly dispersive effective equation, solves the
heterogeneous and the effective wave equations with finite differences, and
quantifies the O(eps) approximation error over times of order 1/eps^2.
"""

from . import (bloch_cell, core_types, dispersion, effective_fdm, hetero_fdm,
               oracle_expansion)

__version__ = "0.1.0"

__all__ = ["bloch_cell", "core_types", "dispersion", "effective_fdm",
           "hetero_fdm", "oracle_expansion", "__version__"]
