"""Shared value types, angle helpers, seeded RNG streams and trajectory resampling."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

TWO_PI = 2.0 * math.pi


class Vec2(NamedTuple):
    x: float
    y: float

    def norm(self) -> float:
        return math.hypot(self.x, self.y)

    def __add__(self, other):  # type: ignore[override]
        return Vec2(self.x + other[0], self.y + other[1])

    def __sub__(self, other):
        return Vec2(self.x - other[0], self.y - other[1])

    def __mul__(self, k):  # type: ignore[override]
        return Vec2(self.x * k, self.y * k)

    __rmul__ = __mul__

    def __neg__(self):
        return Vec2(-self.x, -self.y)

    def dot(self, other) -> float:
        return self.x * other[0] + self.y * other[1]

    def rotated(self, angle: float) -> "Vec2":
        c, s = math.cos(angle), math.sin(angle)
        return Vec2(c * self.x - s * self.y, s * self.x + c * self.y)


def wrap_angle(theta):
    """Map an angle (scalar or array) into (-pi, pi]."""
    return theta - TWO_PI * np.ceil((theta - math.pi) / TWO_PI)


def angle_lerp(a0, a1, frac):
    """Interpolate between two angles along the shorter arc."""
    return wrap_angle(a0 + frac * wrap_angle(a1 - a0))


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """PCG64 generator for one named stream of a run.

    All randomness of a run derives from its 64-bit ``seed``; independent
    streams are split off with ``SeedSequence`` spawn keys, so adding a new
    stream never perturbs the draws of an existing one.
    """
    ss = np.random.SeedSequence(entropy=int(seed) & 0xFFFF_FFFF_FFFF_FFFF, spawn_key=tuple(stream))
    return np.random.Generator(np.random.PCG64(ss))


# spawn keys used by the simulator
STREAM_POSITIONS = 0
STREAM_SPEEDS = 1


@dataclass
class AgentState:
    agent_id: int
    group_id: int
    pos: Vec2
    vel: Vec2
    radius: float
    pref_speed: float
    goal: Vec2
    head_angle: float = 0.0

    def __post_init__(self):
        self.pos = Vec2(*self.pos)
        self.vel = Vec2(*self.vel)
        self.goal = Vec2(*self.goal)
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        if self.pref_speed <= 0:
            raise ValueError("pref_speed must be positive")


@dataclass
class CrowdState:
    """Struct-of-arrays snapshot of every agent at time ``t``."""

    t: float
    agent_id: np.ndarray
    group_id: np.ndarray
    pos: np.ndarray  # (n, 2)
    vel: np.ndarray  # (n, 2)
    radius: np.ndarray
    pref_speed: np.ndarray
    goal: np.ndarray  # (n, 2)
    head: np.ndarray

    def __len__(self) -> int:
        return len(self.agent_id)

    def copy(self) -> "CrowdState":
        return CrowdState(
            self.t,
            self.agent_id.copy(),
            self.group_id.copy(),
            self.pos.copy(),
            self.vel.copy(),
            self.radius.copy(),
            self.pref_speed.copy(),
            self.goal.copy(),
            self.head.copy(),
        )

    def agent(self, i: int) -> AgentState:
        return AgentState(
            int(self.agent_id[i]),
            int(self.group_id[i]),
            Vec2(*self.pos[i]),
            Vec2(*self.vel[i]),
            float(self.radius[i]),
            float(self.pref_speed[i]),
            Vec2(*self.goal[i]),
            float(self.head[i]),
        )

    def agents(self) -> list[AgentState]:
        return [self.agent(i) for i in range(len(self))]

    @classmethod
    def from_agents(cls, agents: Sequence[AgentState], t: float = 0.0) -> "CrowdState":
        return cls(
            t,
            np.array([a.agent_id for a in agents], dtype=np.int64),
            np.array([a.group_id for a in agents], dtype=np.int64),
            np.array([a.pos for a in agents], dtype=float).reshape(-1, 2),
            np.array([a.vel for a in agents], dtype=float).reshape(-1, 2),
            np.array([a.radius for a in agents], dtype=float),
            np.array([a.pref_speed for a in agents], dtype=float),
            np.array([a.goal for a in agents], dtype=float).reshape(-1, 2),
            np.array([a.head_angle for a in agents], dtype=float),
        )

    def shifted(self, offset) -> "CrowdState":
        s = self.copy()
        s.pos += np.asarray(offset, dtype=float)
        s.goal += np.asarray(offset, dtype=float)
        return s


class TrajectorySample(NamedTuple):
    t: float
    pos: Vec2
    head_angle: float


class DegenerateTrajectory(ValueError):
    pass


@dataclass
class Trajectory:
    """Time series of (t, x, y, head) for one agent, stored as flat arrays."""

    agent_id: int
    group_id: int
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    head: np.ndarray
    dt_sample: float = field(default=float("nan"))

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        self.head = np.asarray(self.head, dtype=float)
        n = len(self.t)
        if not (len(self.x) == len(self.y) == len(self.head) == n):
            raise ValueError("trajectory arrays differ in length")
        if n > 1 and not np.all(np.diff(self.t) > 0):
            raise ValueError("trajectory timestamps must be strictly increasing")
        if math.isnan(self.dt_sample) and n > 1:
            self.dt_sample = float(self.t[1] - self.t[0])

    @classmethod
    def from_samples(cls, agent_id: int, group_id: int, samples: Sequence[TrajectorySample]) -> "Trajectory":
        return cls(
            agent_id,
            group_id,
            [s.t for s in samples],
            [s.pos[0] for s in samples],
            [s.pos[1] for s in samples],
            [s.head_angle for s in samples],
        )

    @property
    def samples(self) -> list[TrajectorySample]:
        return [
            TrajectorySample(float(t), Vec2(float(x), float(y)), float(h))
            for t, x, y, h in zip(self.t, self.x, self.y, self.head)
        ]

    def __len__(self) -> int:
        return len(self.t)

    @property
    def positions(self) -> np.ndarray:
        return np.column_stack([self.x, self.y])

    def is_uniform(self, dt: float, tol: float = 1e-9) -> bool:
        if len(self.t) < 2:
            return False
        return bool(np.all(np.abs(np.diff(self.t) - dt) <= tol))

    def equals(self, other: "Trajectory") -> bool:
        return (
            self.agent_id == other.agent_id
            and self.group_id == other.group_id
            and np.array_equal(self.t, other.t)
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.y, other.y)
            and np.array_equal(self.head, other.head)
        )


def resample(traj: Trajectory, dt_out: float, t_start: float | None = None, t_end: float | None = None) -> Trajectory:
    """Resample ``traj`` on the uniform grid t_start + k*dt_out <= t_end.

    Positions are interpolated linearly, head angles along the shorter arc.
    The window defaults to the trajectory's own span; when the trajectory is
    already uniform at ``dt_out`` on that window it is returned unchanged
    (as a copy), which makes resampling idempotent.
    """
    if len(traj) < 2:
        raise DegenerateTrajectory("degenerate trajectory")
    if not dt_out > 0:
        raise ValueError("dt_out must be positive")
    t0 = float(traj.t[0]) if t_start is None else float(t_start)
    t1 = float(traj.t[-1]) if t_end is None else float(t_end)
    if t0 < traj.t[0] - 1e-9 or t1 > traj.t[-1] + 1e-9 or t1 < t0:
        raise ValueError("resampling window lies outside the trajectory")

    n = int(math.floor((t1 - t0) / dt_out + 1e-9)) + 1
    tq = t0 + dt_out * np.arange(n)
    if len(traj) == n and np.array_equal(tq, traj.t):
        return Trajectory(traj.agent_id, traj.group_id, traj.t.copy(), traj.x.copy(), traj.y.copy(), traj.head.copy(), dt_out)
    if traj.is_uniform(dt_out) and abs(traj.t[0] - t0) <= 1e-9 and len(traj) >= n:
        # already on this grid up to clock jitter
        return Trajectory(traj.agent_id, traj.group_id, tq, traj.x[:n].copy(), traj.y[:n].copy(), traj.head[:n].copy(), dt_out)

    tq = np.clip(tq, traj.t[0], traj.t[-1])
    k = np.searchsorted(traj.t, tq, side="right") - 1
    k = np.clip(k, 0, len(traj) - 2)
    frac = (tq - traj.t[k]) / (traj.t[k + 1] - traj.t[k])
    x = traj.x[k] + frac * (traj.x[k + 1] - traj.x[k])
    y = traj.y[k] + frac * (traj.y[k + 1] - traj.y[k])
    head = angle_lerp(traj.head[k], traj.head[k + 1], frac)
    # exact nodes must reproduce stored values
    exact = frac == 0.0
    x[exact] = traj.x[k[exact]]
    y[exact] = traj.y[k[exact]]
    head[exact] = traj.head[k[exact]]
    return Trajectory(traj.agent_id, traj.group_id, t0 + dt_out * np.arange(n), x, y, head, dt_out)


def finite_difference_velocity(traj: Trajectory, i: int) -> Vec2:
    n = len(traj)
    if n < 2:
        raise DegenerateTrajectory("degenerate trajectory")
    if not 0 <= i < n:
        raise IndexError(i)
    if i == 0:
        a, b = 0, 1
    elif i == n - 1:
        a, b = n - 2, n - 1
    else:
        a, b = i - 1, i + 1
    dt = traj.t[b] - traj.t[a]
    return Vec2(float((traj.x[b] - traj.x[a]) / dt), float((traj.y[b] - traj.y[a]) / dt))


def velocities(traj: Trajectory) -> np.ndarray:
    """Vectorised ``finite_difference_velocity`` for every sample, shape (n, 2)."""
    if len(traj) < 2:
        raise DegenerateTrajectory("degenerate trajectory")
    n = len(traj)
    lo = np.maximum(np.arange(n) - 1, 0)
    hi = np.minimum(np.arange(n) + 1, n - 1)
    dt = traj.t[hi] - traj.t[lo]
    return np.column_stack([(traj.x[hi] - traj.x[lo]) / dt, (traj.y[hi] - traj.y[lo]) / dt])
