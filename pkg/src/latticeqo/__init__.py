"""Single-excitation radiation dynamics in 2D photonic lattice reservoirs.

A quantum emitter is modelled as one extra waveguide evanescently coupled to
a finite square or Lieb waveguide array.  The package builds the lattice
graphs and single-excitation Hamiltonians, computes band structures and
density-of-states, propagates amplitudes along the waveguide axis z with two
independent propagators, and evaluates the standard diagnostics (emitter
population, participation ratio, population revivals, wavelength sweeps).
"""

__version__ = "0.1.0"

from .errors import LatticeQOError, SolverError, ValidationError

__all__ = ["LatticeQOError", "SolverError", "ValidationError", "__version__"]
