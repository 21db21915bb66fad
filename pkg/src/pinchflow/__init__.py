"""Quartic curvature pinching: inequality lab, equivariant flow and a small mean curvature flow solver."""
from .equivariant import EquivariantState, Termination, Trajectory, evolve
from .errors import (CflViolation, DegenerateMeanCurvature, DegenerateMetric, DomainError, PinchflowError,
                     RatioUndefined, SamplerExhausted, StepUnderflow)
from .mcf import MeshImmersion, compute_geometry, evolution_identity_residual, run_monitors, step
from .profile import PinchingProfile, SharpFamilyPoint, sharpness_defect
from .sff import SffTensor, batch_invariants

__version__ = "0.1.0"

__all__ = [
    "CflViolation", "DegenerateMeanCurvature", "DegenerateMetric", "DomainError", "EquivariantState",
    "MeshImmersion", "PinchflowError", "PinchingProfile", "RatioUndefined", "SamplerExhausted", "SffTensor",
    "SharpFamilyPoint", "StepUnderflow", "Termination", "Trajectory", "batch_invariants", "compute_geometry",
    "evolution_identity_residual", "evolve", "run_monitors", "sharpness_defect", "step",
]
