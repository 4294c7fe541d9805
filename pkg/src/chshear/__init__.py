"""Pseudo-spectral experiments for the unstable Cahn-Hilliard equation with shear flow."""

__version__ = "0.1.0"

from .errors import ChShearError, ConfigError
from .integrators import SimState, Status, StepController, Trajectory, integrate, step
from .operators import Form, PhysicalParams, ShearProfile, SpectralOperator, shear_profile
from .spectral import Field, TorusGrid

__all__ = [
    "__version__", "ChShearError", "ConfigError", "SimState", "Status", "StepController",
    "Trajectory", "integrate", "step", "Form", "PhysicalParams", "ShearProfile",
    "SpectralOperator", "shear_profile", "Field", "TorusGrid",
]
