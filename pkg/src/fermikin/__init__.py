"""Kinetic equations for weakly interacting lattice fermions.

Modules:
    lattice: momentum grid, dispersions, pair potentials, mollifiers.
    spinless: scalar Boltzmann-Nordheim equation and Fermi-Dirac fitting.
    hubbard: matrix-valued Hubbard-Boltzmann equation.
    integrator: admissibility-controlled Runge-Kutta stepping.
    fock: exact many-body oracle on small lattices.
    scenarios, cli: batch driver.
"""

from .errors import (AdmissibilityError, BoundaryTargetError, ConfigError, FermikinError, FitError, GridError,
                     InfeasibleTargetError, PotentialError, StepFailure, TranslationInvarianceError)
from .kernels import BACKEND
from .lattice import (KGrid, Regularization, build_grid, cosine_potential, default_eps, eval_dispersion,
                      mollified_delta, mollified_delta_lorentzian, mollified_pv, nearest_neighbour,
                      nearest_plus_nnn, regularization, resonant_eps, wrap)

__version__ = "0.1.0"
