"""Discontinuous Galerkin solver for the isothermal Navier-Stokes-Allen-Cahn system in 1D.

The scheme is written in mixed form with unknowns (rho, v, phi, mu, tau, sigma)
and advanced by an implicit, energy-stable midpoint/splitting step.
"""

from .diagnostics import compute_eoc, discrete_energy, energy_balance_residual, total_mass
from .mesh_dg import Basis, DGField, build_mesh, l2_project
from .mms import ManufacturedSolution
from .spatial import FluxParams, StateVector, assemble_residual
from .stepper import (
    DensityPositivityLoss, NonConvergence, SolverConfig, TimeGrid, make_initial_state, newton_step, run,
)
from .thermo import DensityError, MixtureParams, PhaseEOS

__version__ = "0.1.0"

__all__ = [
    "Basis", "DGField", "DensityError", "DensityPositivityLoss", "FluxParams", "ManufacturedSolution",
    "MixtureParams", "NonConvergence", "PhaseEOS", "SolverConfig", "StateVector", "TimeGrid",
    "assemble_residual", "build_mesh", "compute_eoc", "discrete_energy", "energy_balance_residual",
    "l2_project", "make_initial_state", "newton_step", "run", "total_mass",
]
