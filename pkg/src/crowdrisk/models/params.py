from __future__ import annotations

import enum
import math
from dataclasses import dataclass, fields, replace


class ModelKind(str, enum.Enum):
    SOCIAL_FORCES = "SocialForces"
    RVO = "RVO"
    ORCA = "ORCA"
    POWER_LAW = "PowerLaw"
    MOUSSAID = "Moussaid"

    @classmethod
    def parse(cls, token: str) -> "ModelKind":
        key = token.strip().lower().replace("_", "").replace("-", "")
        for kind in cls:
            if kind.value.lower() == key:
                return kind
        raise ValueError(f"unknown model {token!r} (expected one of {', '.join(k.value for k in cls)})")

    @property
    def is_force_based(self) -> bool:
        return self in (ModelKind.SOCIAL_FORCES, ModelKind.POWER_LAW)


class WallMode(str, enum.Enum):
    NONE = "none"
    REPULSIVE = "repulsive"

    @classmethod
    def parse(cls, token: str) -> "WallMode":
        try:
            return cls(token.strip().lower())
        except ValueError:
            raise ValueError(f"unknown wall_mode {token!r} (expected none or repulsive)") from None


@dataclass(frozen=True)
class ModelParams:
    """Default steering parameters of all five models.

    These are our own literature-typical values; none of them is tuned.
    """

    # SocialForces
    sf_tau_relax: float = 0.5
    sf_strength: float = 4.5  # m/s^2
    sf_range: float = 0.3  # m
    # PowerLaw
    pl_k: float = 1.5
    pl_tau0: float = 3.0
    pl_cutoff: float = 10.0
    pl_force_max: float = 20.0
    pl_tau_relax: float = 0.5
    # RVO
    rvo_horizon: float = 5.0
    rvo_neighbour_radius: float = 5.0
    rvo_samples: int = 256
    rvo_weight: float = 1.0  # m^2/s
    # ORCA
    orca_horizon: float = 2.0
    orca_obstacle_horizon: float = 2.0
    # Moussaid
    mou_angular_range: float = math.radians(75.0)
    mou_horizon: float = 8.0
    mou_tau_relax: float = 0.5
    mou_headings: int = 61
    # shared
    perception_radius: float = 5.0
    wall_strength: float = 4.5
    wall_range: float = 0.3

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not v > 0:
                raise ValueError(f"model parameter {f.name} must be positive, got {v}")
        if self.rvo_samples < 1:
            raise ValueError("rvo_samples must be >= 1")
        if self.mou_headings % 2 == 0:
            raise ValueError("mou_headings must be odd so the goal direction is a candidate")

    def with_(self, **changes) -> "ModelParams":
        return replace(self, **changes)

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]
