"""Minimal front speeds of the periodic KPP equation and their maximisation."""
from .constraints import ConstraintSpec, build_b1, constraint_value, project_box, project_scale
from .eigen import EigenPair, principal_eigenpair, principal_eigenvalue, rescaling_check
from .errors import (
    AliasingError, ConfigError, ConvergenceError, DegenerateError, GridTooCoarseError, KPPError,
    PreconditionError,
)
from .grid import CoefField, GridFunction, PeriodicGrid
from .optimize import AscentReport, maximize_cstar
from .rearrange import schwarz_rearrange
from .speed import SpeedResult, dcstar_db, dk_db, dlambda_db, minimal_speed, nadin_functional, nadin_minimize
from .stepfn import StepProfile, cstar_step, exact_k, hfr_limit_speed, sweep_theta

__version__ = "0.1.0"
