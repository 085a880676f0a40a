from .empirical import EmpiricalObjective, ReferenceSet, build_objective
from .fidelity import ReferenceMiss
from .frechet import FrechetReference, fd_gradient, fd_loss
from .quadratic import QuadEstimate, QuadMode, QuadraticForm, quad_estimate_update, quad_gradient, quad_loss
from .spec import ObjectiveKind, ObjectiveSpec, objective_spec_from_dict
from .stats import ArmMomentStats, FidelityStats, mixture_moments
from .vendi import PooledKernelState, nlv_gradient_features, nlv_gradient_kernel, nlv_loss_features, nlv_loss_kernel, nlv_weights

__all__ = [
    "ArmMomentStats",
    "EmpiricalObjective",
    "FidelityStats",
    "FrechetReference",
    "ObjectiveKind",
    "ObjectiveSpec",
    "PooledKernelState",
    "QuadEstimate",
    "QuadMode",
    "QuadraticForm",
    "ReferenceMiss",
    "ReferenceSet",
    "build_objective",
    "fd_gradient",
    "fd_loss",
    "mixture_moments",
    "nlv_gradient_features",
    "nlv_gradient_kernel",
    "nlv_loss_features",
    "nlv_loss_kernel",
    "nlv_weights",
    "objective_spec_from_dict",
    "quad_estimate_update",
    "quad_gradient",
    "quad_loss",
]
