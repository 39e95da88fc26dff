"""Screened-Coulomb pseudopotentials for many-electron atoms solved in a B-spline box."""

from .atoms import (
    HARTREE_EV,
    ElementRecord,
    builtin_elements,
    element,
    excited_spectrum,
    ionization_potential,
    scale_energy,
)
from .potentials import ModelKind, PotentialModel, potential_value, zeta
from .radial import RadialSolver, SolverConfig, get_solver

__version__ = "0.1.0"

__all__ = [
    "HARTREE_EV",
    "ElementRecord",
    "ModelKind",
    "PotentialModel",
    "RadialSolver",
    "SolverConfig",
    "builtin_elements",
    "element",
    "excited_spectrum",
    "get_solver",
    "ionization_potential",
    "potential_value",
    "scale_energy",
    "zeta",
    "__version__",
]
