"""Continuous lattice-BGK solver, 2D Navier-Stokes reference and the hydrodynamic-limit study."""

from .experiments import (
    ConvergenceConfig,
    ConvergenceResult,
    InitialCondition,
    fit_power_law,
    run_convergence,
    run_tg_validation,
    run_vortex_evolution,
)
from .lattice import (
    D3FamilyParams,
    IsotropyReport,
    Lattice,
    LatticeError,
    d2q7,
    d2q9,
    d3_family,
    moment,
    scale,
    validate_isotropy,
)
from .lbgk import LbgkParams, LbgkState, MacroFields
from .ns2d import Diagnostics, NsParams, NsState
from .spectral import Grid2D, RealField2D
from .timestepping import IntegrationBlowup

__version__ = "0.1.0"

__all__ = [
    "ConvergenceConfig", "ConvergenceResult", "D3FamilyParams", "Diagnostics", "Grid2D",
    "InitialCondition", "IntegrationBlowup", "IsotropyReport", "Lattice", "LatticeError",
    "LbgkParams", "LbgkState", "MacroFields", "NsParams", "NsState", "RealField2D",
    "d2q7", "d2q9", "d3_family", "fit_power_law", "moment", "run_convergence",
    "run_tg_validation", "run_vortex_evolution", "scale", "validate_isotropy",
]
