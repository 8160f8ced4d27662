"""Bidirectional corridor scenario: geometry, initial placement, config files.

Layout along x: left waiting zone [-depth, 0], central corridor [0, length],
right waiting zone [length, length + depth]. The corridor axis is y = 0 and
the walls run along y = +-width/2 over the whole walkable span. Group 0
starts on the left and heads for the star at x = length + depth + offset,
group 1 mirrors it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from ..core import STREAM_POSITIONS, STREAM_SPEEDS, CrowdState, make_rng
from ..keyvalue import parse_key_value_lines, parse_scalar
from ..models.geometry import Wall
from ..models.params import ModelKind, ModelParams, WallMode

MAX_REJECTIONS = 1_000_000
# random sequential addition cannot exceed roughly this area fraction
JAMMING_COVERAGE = 0.54


class ZoneTooDense(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    corridor_width: float = 4.0
    corridor_length: float = 10.0
    waiting_zone_depth: float = 8.0
    n_per_side: int = 45
    body_radius: float = 0.2
    speed_min: float = 1.0
    speed_max: float = 1.5
    goal_offset: float = 5.0
    duration: float = 18.0
    dt: float = 0.01
    dt_sample: float = 0.1
    wall_mode: WallMode = WallMode.REPULSIVE
    model: ModelKind = ModelKind.SOCIAL_FORCES
    seed: int = 1

    def __post_init__(self):
        object.__setattr__(self, "wall_mode", WallMode(self.wall_mode))
        object.__setattr__(self, "model", ModelKind(self.model))
        if not self.corridor_width > 2 * self.body_radius:
            raise ValueError("corridor_width must exceed the body diameter")
        if self.body_radius <= 0:
            raise ValueError("body_radius must be positive")
        if not 0 < self.speed_min <= self.speed_max:
            raise ValueError("need 0 < speed_min <= speed_max")
        if self.dt <= 0 or self.duration <= 0 or self.dt_sample <= 0:
            raise ValueError("dt, dt_sample and duration must be positive")
        if self.n_per_side < 1:
            raise ValueError("n_per_side must be >= 1")
        if self.corridor_length <= 0 or self.waiting_zone_depth <= 2 * self.body_radius:
            raise ValueError("corridor_length and waiting_zone_depth too small")

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))

    @property
    def x_mid(self) -> float:
        return 0.5 * self.corridor_length

    def with_(self, **changes) -> "ScenarioConfig":
        return replace(self, **changes)

    def zones(self) -> list[tuple[float, float]]:
        d, length = self.waiting_zone_depth, self.corridor_length
        return [(-d, 0.0), (length, length + d)]

    def goals(self) -> list[tuple[float, float]]:
        d, length, off = self.waiting_zone_depth, self.corridor_length, self.goal_offset
        return [(length + d + off, 0.0), (-d - off, 0.0)]

    def walls(self) -> list[Wall]:
        if self.wall_mode is WallMode.NONE:
            return []
        return corridor_walls(self)


def corridor_walls(cfg: ScenarioConfig) -> list[Wall]:
    x0 = -cfg.waiting_zone_depth - cfg.goal_offset
    x1 = cfg.corridor_length + cfg.waiting_zone_depth + cfg.goal_offset
    h = 0.5 * cfg.corridor_width
    return [Wall((x0, -h), (x1, -h)), Wall((x0, h), (x1, h))]


def _place_zone(rng, n, x_lo, x_hi, half_w, r, placed):
    pts = []
    fails = 0
    min_d2 = (2 * r) ** 2
    while len(pts) < n:
        x = rng.uniform(x_lo + r, x_hi - r)
        y = rng.uniform(-half_w + r, half_w - r)
        if any((x - px) ** 2 + (y - py) ** 2 < min_d2 for px, py in pts):
            fails += 1
            if fails >= MAX_REJECTIONS:
                raise ZoneTooDense("zone too dense")
            continue
        fails = 0
        pts.append((x, y))
    placed.extend(pts)


def init_corridor(cfg: ScenarioConfig) -> CrowdState:
    """Both groups randomly placed in their waiting zones, at rest, facing their goals."""
    r = cfg.body_radius
    half_w = 0.5 * cfg.corridor_width
    zone_area = cfg.waiting_zone_depth * cfg.corridor_width
    if cfg.n_per_side * math.pi * r * r > JAMMING_COVERAGE * zone_area:
        raise ZoneTooDense(
            f"zone too dense: {cfg.n_per_side} discs of radius {r} do not fit a "
            f"{cfg.waiting_zone_depth} x {cfg.corridor_width} m waiting zone"
        )
    pos_rng = make_rng(cfg.seed, STREAM_POSITIONS)
    speed_rng = make_rng(cfg.seed, STREAM_SPEEDS)
    pos: list[tuple[float, float]] = []
    for lo, hi in cfg.zones():
        _place_zone(pos_rng, cfg.n_per_side, lo, hi, half_w, r, pos)
    n = 2 * cfg.n_per_side
    group = np.repeat([0, 1], cfg.n_per_side)
    goals = np.array(cfg.goals(), dtype=float)[group]
    pos_arr = np.array(pos, dtype=float)
    heading = np.arctan2(goals[:, 1] - pos_arr[:, 1], goals[:, 0] - pos_arr[:, 0])
    return CrowdState(
        t=0.0,
        agent_id=np.arange(n, dtype=np.int64),
        group_id=group.astype(np.int64),
        pos=pos_arr,
        vel=np.zeros((n, 2)),
        radius=np.full(n, r),
        pref_speed=speed_rng.uniform(cfg.speed_min, cfg.speed_max, size=n),
        goal=goals,
        head=heading,
    )


_SCENARIO_FIELDS = {f.name: f for f in fields(ScenarioConfig)}
_PARAM_FIELDS = set(ModelParams.field_names())


def parse_scenario_config(text: str, source: str = "<scenario>") -> tuple[ScenarioConfig, ModelParams]:
    """Parse ``key=value`` lines into a scenario and model parameters.

    Keys are ScenarioConfig fields or ModelParams fields; angles for
    ``mou_angular_range`` are given in degrees.
    """
    scen: dict = {}
    prm: dict = {}
    for lineno, key, value in parse_key_value_lines(text, source):
        if key in _SCENARIO_FIELDS:
            scen[key] = _convert_scenario(key, value, source, lineno)
        elif key in _PARAM_FIELDS:
            v = parse_scalar(value, source, lineno)
            prm[key] = math.radians(v) if key == "mou_angular_range" else v
            if key in ("rvo_samples", "mou_headings"):
                prm[key] = int(prm[key])
        else:
            raise ValueError(f"{source}:{lineno}: unknown key {key!r}")
    try:
        return ScenarioConfig(**scen), ModelParams(**prm)
    except ValueError as exc:
        raise ValueError(f"{source}: {exc}") from None


def _convert_scenario(key, value, source, lineno):
    try:
        if key == "model":
            return ModelKind.parse(value)
        if key == "wall_mode":
            return WallMode.parse(value)
        if key in ("n_per_side", "seed"):
            return int(value)
        return parse_scalar(value, source, lineno)
    except ValueError as exc:
        raise ValueError(f"{source}:{lineno}: bad value for {key}: {exc}") from None


def load_scenario_config(path) -> tuple[ScenarioConfig, ModelParams]:
    path = Path(path)
    return parse_scenario_config(path.read_text(), str(path))


def format_scenario_config(cfg: ScenarioConfig, params: ModelParams | None = None) -> str:
    lines = []
    for name in _SCENARIO_FIELDS:
        v = getattr(cfg, name)
        lines.append(f"{name}={v.value if hasattr(v, 'value') else repr(v)}")
    if params is not None:
        for name in ModelParams.field_names():
            v = getattr(params, name)
            if name == "mou_angular_range":
                v = math.degrees(v)
            lines.append(f"{name}={v!r}")
    return "\n".join(lines) + "\n"
