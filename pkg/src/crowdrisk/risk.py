"""Airborne-transmission risk from trajectories and concentration maps.

The transmission rate from emitter E to receiver R is read off the map of
E's exhalation mode and relative wind, at R's position in E's head frame,
``t_r - t_e`` seconds after emission, and divided by the characteristic
infection time ``T0``. Summing over both times gives a dose per ordered pair,
which is turned into expected new cases per hour.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from numba import njit

from .core import Trajectory, Vec2, velocities
from .maps import CUTOFF_RADIUS, ExhalationMode, MapLibrary, bin_indices, nearest_map, sample, trilinear


@dataclass(frozen=True)
class RunConfig:
    T0: float = 900.0  # s
    ambient_wind: Vec2 = Vec2(0.0, 0.0)
    mode: ExhalationMode = ExhalationMode.SPEAKING
    isotropic_inhalation: bool = False
    contagion_amid_groups: bool = True
    dt_risk: float = 0.1
    cutoff_distance: float = CUTOFF_RADIUS
    tau_max: float = 20.0
    linearized: bool = False

    def __post_init__(self):
        object.__setattr__(self, "ambient_wind", Vec2(*map(float, self.ambient_wind)))
        object.__setattr__(self, "mode", ExhalationMode(self.mode))
        if not self.T0 > 0:
            raise ValueError("T0 must be positive")
        if not self.dt_risk > 0:
            raise ValueError("dt_risk must be positive")
        if self.cutoff_distance != CUTOFF_RADIUS:
            raise ValueError(f"cutoff distance is fixed at {CUTOFF_RADIUS} m")
        if not self.tau_max > 0:
            raise ValueError("tau_max must be positive")

    def with_(self, **kw) -> "RunConfig":
        return replace(self, **kw)


@dataclass
class RiskReport:
    agent_ids: np.ndarray
    cbar: np.ndarray  # new cases per hour, per emitter
    clow: np.ndarray
    t_obs: float
    doses: np.ndarray = field(repr=False)  # D[e, r]

    @property
    def mean_cbar(self) -> float:
        return float(np.mean(self.cbar))

    @property
    def mean_clow(self) -> float:
        return float(np.mean(self.clow))

    def by_agent(self) -> dict:
        return {int(a): (float(lo), float(hi)) for a, lo, hi in zip(self.agent_ids, self.clow, self.cbar)}


def _rotate(v, angle):
    c, s = math.cos(angle), math.sin(angle)
    return Vec2(c * v[0] - s * v[1], s * v[0] + c * v[1])


def relative_wind(e_sample, e_velocity, ambient) -> Vec2:
    """Wind felt by the emitter, expressed in its head frame."""
    return _rotate((ambient[0] - e_velocity[0], ambient[1] - e_velocity[1]), -e_sample.head_angle)


def exposure_rate(e_sample, e_vel, r_sample, lib: MapLibrary, cfg: RunConfig) -> float:
    """Rate (1/s^2) at which R, at ``r_sample``, inhales what E exhaled at ``e_sample``."""
    tau = r_sample.t - e_sample.t
    if tau < 0:
        raise ValueError("receiver time precedes emission time")
    if tau > cfg.tau_max:
        return 0.0
    dx, dy = r_sample.pos[0] - e_sample.pos[0], r_sample.pos[1] - e_sample.pos[1]
    if dx * dx + dy * dy > cfg.cutoff_distance**2:
        return 0.0
    if not cfg.isotropic_inhalation:
        # emission point must lie in the receiver's frontal half-space
        if math.cos(r_sample.head_angle) * -dx + math.sin(r_sample.head_angle) * -dy < 0:
            return 0.0
    cmap = nearest_map(lib, cfg.mode, relative_wind(e_sample, e_vel, cfg.ambient_wind))
    xi = _rotate((dx, dy), -e_sample.head_angle)
    return sample(cmap, xi, tau) / cfg.T0


def check_time_base(trajs: list[Trajectory]) -> np.ndarray:
    t = trajs[0].t
    for tr in trajs[1:]:
        if len(tr.t) != len(t) or not np.allclose(tr.t, t, rtol=0, atol=1e-9):
            raise ValueError(f"trajectories {trajs[0].agent_id} and {tr.agent_id} do not share a time base")
    if len(t) < 2:
        raise ValueError("time base needs at least two samples")
    return t


@njit(cache=True)
def _dose_kernel(X, Y, H, midx, maps, x0, y0, dx, dy, dtau, dt, kmax, cutoff, iso, group, amid, emitters, receivers):
    n_agents, n_t = X.shape
    D = np.zeros((n_agents, n_agents))
    cos_h = np.cos(H)
    sin_h = np.sin(H)
    c2 = cutoff * cutoff
    for e in emitters:
        for r in receivers:
            if r == e or (not amid and group[e] == group[r]):
                continue
            total = 0.0
            for i in range(n_t):  # receiver time
                xr = X[r, i]
                yr = Y[r, i]
                acc = 0.0
                j0 = i - kmax
                if j0 < 0:
                    j0 = 0
                for j in range(j0, i + 1):  # emission time
                    ddx = xr - X[e, j]
                    ddy = yr - Y[e, j]
                    if ddx * ddx + ddy * ddy > c2:
                        continue
                    if not iso and cos_h[r, i] * -ddx + sin_h[r, i] * -ddy < 0.0:
                        continue
                    ch = cos_h[e, j]
                    sh = sin_h[e, j]
                    acc += trilinear(maps[midx[e, j]], x0, y0, dx, dy, dtau,
                                     ch * ddx + sh * ddy, -sh * ddx + ch * ddy, (i - j) * dt)
                total += acc
            D[e, r] = total
    return D


def _emitter_bins(trajs: list[Trajectory], ambient) -> np.ndarray:
    rows = []
    for tr in trajs:
        v = velocities(tr)
        wx = ambient[0] - v[:, 0]
        wy = ambient[1] - v[:, 1]
        c, s = np.cos(tr.head), np.sin(tr.head)
        rows.append(bin_indices(np.column_stack([c * wx + s * wy, -s * wx + c * wy])))
    return np.stack(rows).astype(np.int64)


def dose_matrix(trajs: list[Trajectory], lib: MapLibrary, cfg: RunConfig, emitters=None, receivers=None,
                ignore_groups: bool = False) -> np.ndarray:
    """D[e, r] for all ordered pairs on a shared time base (zero on the diagonal)."""
    t = check_time_base(trajs)
    dt = float(t[1] - t[0])
    if not np.allclose(np.diff(t), dt, rtol=0, atol=1e-9):
        raise ValueError("time base is not uniform")
    maps, grid = lib.stack(cfg.mode)
    tau_end = min(cfg.tau_max, grid.tau_end)
    kmax = int(math.floor(tau_end / dt + 1e-9))
    X = np.stack([tr.x for tr in trajs]).astype(float)
    Y = np.stack([tr.y for tr in trajs]).astype(float)
    H = np.stack([tr.head for tr in trajs]).astype(float)
    n = len(trajs)
    emitters = np.arange(n) if emitters is None else np.asarray(emitters, dtype=np.int64)
    receivers = np.arange(n) if receivers is None else np.asarray(receivers, dtype=np.int64)
    group = np.array([tr.group_id for tr in trajs], dtype=np.int64)
    D = _dose_kernel(
        X, Y, H, _emitter_bins(trajs, cfg.ambient_wind), maps,
        grid.x0, grid.y0, grid.dx, grid.dy, grid.dtau, dt, kmax, cfg.cutoff_distance,
        cfg.isotropic_inhalation, group, ignore_groups or cfg.contagion_amid_groups,
        emitters.astype(np.int64), receivers.astype(np.int64),
    )
    return D * dt * dt / cfg.T0


def pair_dose(e_traj: Trajectory, r_traj: Trajectory, lib: MapLibrary, cfg: RunConfig) -> float:
    """Dose received by R from E (no group exclusion; callers decide which pairs count)."""
    D = dose_matrix([e_traj, r_traj], lib, cfg, emitters=[0], receivers=[1], ignore_groups=True)
    return float(D[0, 1])


def cases_from_doses(D: np.ndarray, t_obs: float, linearized: bool = False):
    """(Cbar, Clow) per emitter from a dose matrix with zero diagonal."""
    p = D.copy() if linearized else -np.expm1(-D)
    scale = 3600.0 / t_obs
    cbar = scale * p.sum(axis=1)
    clow = scale * (p * np.exp(-D)).sum(axis=1)
    return cbar, clow


def assess(trajs: list[Trajectory], lib: MapLibrary, cfg: RunConfig) -> RiskReport:
    if len(trajs) < 2:
        raise ValueError("risk assessment needs at least two trajectories")
    t = check_time_base(trajs)
    D = dose_matrix(trajs, lib, cfg)
    t_obs = float(t[-1] - t[0])
    cbar, clow = cases_from_doses(D, t_obs, cfg.linearized)
    ids = np.array([tr.agent_id for tr in trajs])
    return RiskReport(ids, cbar, clow, t_obs, D)
