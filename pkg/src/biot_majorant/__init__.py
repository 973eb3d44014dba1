"""Guaranteed functional error majorants for the static Barenblatt-Biot system."""

from .fem import MaterialParams
from .majorant import Loads, MajorantReport, friedrichs_constant, korn_constant, majorant_total
from .mesh import Mesh2D, refine_uniform, unit_rectangle_mesh
from .reconstruction import FluxPair, StressField, flux_nodal_average, minimize_majorant_flux, stress_nodal_average
from .solvers import DisplacementField, PressurePair, solve_double_diffusion, solve_elasticity
from .verification import manufactured_case

__version__ = "0.1.0"
