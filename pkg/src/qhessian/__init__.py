"""Quaternionic m-Hessian operators: algebra, exterior forms, a Dirichlet solver and capacities."""
from ._accel import HAVE_NUMBA, set_backend, use_numba
from .errors import (
    AdmissibilityLoss, BarrierFailure, ConeViolation, DegreeOverflow, IndexOutOfRange, MalformedInput,
    NonConvergence, OracleMismatch, PairingFailure, QHessianError, ShapeMismatch, StencilOutOfDomain,
)
from .quatlinalg import HyperhermitianMatrix, Quaternion, eigenvalues, moore_det

__version__ = "0.1.0"
