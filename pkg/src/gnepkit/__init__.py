"""Solvers and structural checks for convex generalized Nash equilibrium problems."""
from .errors import (
    ConvergenceError,
    DimensionError,
    DomainError,
    GnepError,
    GradientUnavailable,
    NotPSDError,
    PreconditionError,
)
from .kernels import BACKEND
from .model import (
    TAU_FEAS,
    BlockVector,
    ConstantConstraints,
    GameSpec,
    OracleConstraints,
    OracleObjective,
    QuadraticObjective,
    SharedConstraints,
    SharedSet,
    WeightVector,
    evaluate_objective,
    feasible,
    is_fixed_point,
    partial_gradient,
)

__version__ = "0.1.0"
