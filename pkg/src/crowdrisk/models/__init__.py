from .geometry import HalfPlane, Wall, overlapping, time_to_collision
from .lp import solve_lp2
from .moussaid import moussaid_select
from .orca import orca_escape_vector, orca_halfplane, orca_select_velocity
from .params import ModelKind, ModelParams, WallMode
from .power_law import interaction_energy, power_law_accel
from .rvo import rvo_select_velocity
from .social_forces import social_forces_accel

__all__ = [
    "HalfPlane",
    "ModelKind",
    "ModelParams",
    "Wall",
    "WallMode",
    "interaction_energy",
    "moussaid_select",
    "orca_escape_vector",
    "orca_halfplane",
    "orca_select_velocity",
    "overlapping",
    "power_law_accel",
    "rvo_select_velocity",
    "social_forces_accel",
    "solve_lp2",
    "time_to_collision",
]
