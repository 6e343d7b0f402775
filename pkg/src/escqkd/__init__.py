"""Key distribution with equiangular spherical codes: frames, attack analytics, simulation."""

from .frames import Ensemble, build_icosahedral_code, build_mub, solve_grassmann_frame, verify_frame
from .protocol import EscParams, attack_summary, joint_distribution, rate_bounds, threshold
from .qcore import ValidationError

__all__ = [
    "Ensemble",
    "EscParams",
    "ValidationError",
    "attack_summary",
    "build_icosahedral_code",
    "build_mub",
    "joint_distribution",
    "rate_bounds",
    "solve_grassmann_frame",
    "threshold",
    "verify_frame",
]
