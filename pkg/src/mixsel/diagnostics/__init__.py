from .bounds import (
    FDStructure,
    NLVStructure,
    fannes_audenaert,
    gamma_min_nlv,
    hoeffding_radius,
    nlv_modulus,
    smallest_warm_start,
    theta_radius,
)
from .checks import count_floor, deviation_probe, fd_structure, innovation_structure
from .report import render_report

__all__ = [
    "FDStructure",
    "NLVStructure",
    "count_floor",
    "deviation_probe",
    "fannes_audenaert",
    "fd_structure",
    "gamma_min_nlv",
    "hoeffding_radius",
    "innovation_structure",
    "nlv_modulus",
    "render_report",
    "smallest_warm_start",
    "theta_radius",
]
