"""Time-periodic solutions of the completely resonant nonlinear
Klein-Gordon equation on S^3 by a Lyapunov-Schmidt / mountain-pass scheme."""
from .basis import BasisKind, make_basis
from .errors import *  # noqa: F401,F403
from .field import Field, Sector, Truncation, default_truncation
from .ls_solver import ProblemSpec, solve_range
from .mountain_pass import estimate_mG, find_critical_point, multiplicity_sweep

__version__ = "0.1.0"
