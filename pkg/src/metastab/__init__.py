"""Metastable energy localization in 2D nonlinear lattices.

Subpackages
-----------
spectral   : Fourier conventions, weighted mode norms, Galerkin projection.
lattice    : ETL / Klein-Gordon lattice dynamics and mode energies.
normalform : Pseudospectral solvers for the KdV / KP-II / mKdV / NLS systems.
bridge     : Lattice <-> PDE correspondence, approximate solutions, error fits.
config     : Run-configuration grammar and validation.
cli        : `metastab` command-line driver.
"""

__version__ = "0.1.0"

from . import bridge, config, lattice, normalform, spectral  # noqa: F401
