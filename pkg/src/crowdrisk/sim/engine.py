"""Fixed-step integration of the crowd under one of the five steering models."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from ..core import CrowdState, Trajectory, resample, wrap_angle
from ..models.common import pref_velocity
from ..models.geometry import walls_array
from ..models.moussaid import heading_offsets, moussaid_heading
from ..models.orca import orca_velocity
from ..models.params import ModelKind, ModelParams
from ..models.power_law import pl_accel
from ..models.rvo import candidate_pattern, rvo_velocity
from ..models.social_forces import sf_accel
from .scenario import ScenarioConfig, init_corridor

HEAD_TAU = 0.5  # s, smoothing of the head orientation
HEAD_FREEZE_SPEED = 0.1  # m/s, below this the head keeps its orientation
SPEED_CAP = 2.0  # force models: |v| <= SPEED_CAP * pref_speed
GRID_CELL = 1.0  # m, broadphase cell size

_MODEL_CODE = {
    ModelKind.SOCIAL_FORCES: 0,
    ModelKind.POWER_LAW: 1,
    ModelKind.RVO: 2,
    ModelKind.ORCA: 3,
    ModelKind.MOUSSAID: 4,
}


class SimulationError(RuntimeError):
    def __init__(self, model: ModelKind, agent_id: int, step: int):
        super().__init__(f"NaN state in {model.value} run: agent {agent_id} at step {step}")
        self.model = model
        self.agent_id = agent_id
        self.step = step


@njit(cache=True)
def neighbour_lists(pos, reach, cell):
    """Neighbours within ``reach`` of every agent as CSR arrays, each list sorted by index."""
    n = pos.shape[0]
    start = np.zeros(n + 1, dtype=np.int64)
    if n == 0:
        return start, np.zeros(0, dtype=np.int64)
    xmin = pos[0, 0]
    ymin = pos[0, 1]
    for i in range(n):
        xmin = min(xmin, pos[i, 0])
        ymin = min(ymin, pos[i, 1])
    cx = np.empty(n, dtype=np.int64)
    cy = np.empty(n, dtype=np.int64)
    ncx = 1
    ncy = 1
    for i in range(n):
        cx[i] = int((pos[i, 0] - xmin) / cell)
        cy[i] = int((pos[i, 1] - ymin) / cell)
        ncx = max(ncx, cx[i] + 1)
        ncy = max(ncy, cy[i] + 1)
    # bucket agents by cell (counting sort keeps index order within a cell)
    ncell = ncx * ncy
    counts = np.zeros(ncell + 1, dtype=np.int64)
    for i in range(n):
        counts[cx[i] * ncy + cy[i] + 1] += 1
    for c in range(ncell):
        counts[c + 1] += counts[c]
    members = np.empty(n, dtype=np.int64)
    fill = counts[:-1].copy()
    for i in range(n):
        c = cx[i] * ncy + cy[i]
        members[fill[c]] = i
        fill[c] += 1
    span = int(math.ceil(reach / cell))
    r2 = reach * reach
    buf = np.empty(n * n, dtype=np.int64)
    m = 0
    for i in range(n):
        first = m
        for gx in range(max(0, cx[i] - span), min(ncx, cx[i] + span + 1)):
            for gy in range(max(0, cy[i] - span), min(ncy, cy[i] + span + 1)):
                c = gx * ncy + gy
                for q in range(counts[c], counts[c + 1]):
                    j = members[q]
                    if j == i:
                        continue
                    dx = pos[j, 0] - pos[i, 0]
                    dy = pos[j, 1] - pos[i, 1]
                    if dx * dx + dy * dy <= r2:
                        buf[m] = j
                        m += 1
        buf[first:m].sort()
        start[i + 1] = m
    return start, buf[:m].copy()


@njit(cache=True)
def _wrap(a):
    return a - 2.0 * math.pi * math.ceil((a - math.pi) / (2.0 * math.pi))


@njit(cache=True)
def advance(model, pos, vel, radius, pref, goal, head, walls, prm, pattern, order, offsets,
            dt, n_steps, reach, rec_pos, rec_head, rec_vel):
    """Integrate ``n_steps`` steps in place; records states 1..n_steps. Returns -1 or the failing step*n+agent."""
    n = pos.shape[0]
    new_vel = np.empty((n, 2))
    lines = np.empty((walls.shape[0] + n, 4))
    head_gain = 1.0 - math.exp(-dt / HEAD_TAU)
    for step in range(n_steps):
        # a non-finite position would index outside the broadphase grid
        for i in range(n):
            if not (math.isfinite(pos[i, 0]) and math.isfinite(pos[i, 1])):
                return step * n + i
        start, nbr_all = neighbour_lists(pos, reach, GRID_CELL)
        for i in range(n):
            nbr = nbr_all[start[i]:start[i + 1]]
            if model == 0 or model == 1:
                if model == 0:
                    ax, ay = sf_accel(i, pos, vel, radius, pref, goal, nbr, walls,
                                      prm[0], prm[1], prm[2], prm[3], prm[4])
                else:
                    ax, ay = pl_accel(i, pos, vel, radius, pref, goal, nbr, walls,
                                      prm[0], prm[1], prm[2], prm[3], prm[4], prm[5], prm[6])
                vx = vel[i, 0] + ax * dt
                vy = vel[i, 1] + ay * dt
                s = math.sqrt(vx * vx + vy * vy)
                cap = SPEED_CAP * pref[i]
                if s > cap:
                    vx *= cap / s
                    vy *= cap / s
            elif model == 2:
                vx, vy = rvo_velocity(i, pos, vel, radius, pref, goal, head, nbr, walls, pattern, order,
                                      prm[0], prm[1], prm[2])
            elif model == 3:
                vx, vy = orca_velocity(i, pos, vel, radius, pref, goal, nbr, walls, prm[0], prm[1], dt, lines)
            else:
                c, s, _, speed = moussaid_heading(i, pos, vel, radius, pref, goal, head, nbr, walls, offsets,
                                                  prm[0], prm[1])
                vx = c * speed
                vy = s * speed
            if not (math.isfinite(vx) and math.isfinite(vy)):
                return step * n + i
            new_vel[i, 0] = vx
            new_vel[i, 1] = vy
        for i in range(n):
            vel[i, 0] = new_vel[i, 0]
            vel[i, 1] = new_vel[i, 1]
            pos[i, 0] += vel[i, 0] * dt
            pos[i, 1] += vel[i, 1] * dt
            sp = math.sqrt(vel[i, 0] ** 2 + vel[i, 1] ** 2)
            if sp >= HEAD_FREEZE_SPEED:
                target = math.atan2(vel[i, 1], vel[i, 0])
                head[i] = _wrap(head[i] + head_gain * _wrap(target - head[i]))
            rec_pos[step, i, 0] = pos[i, 0]
            rec_pos[step, i, 1] = pos[i, 1]
            rec_vel[step, i, 0] = vel[i, 0]
            rec_vel[step, i, 1] = vel[i, 1]
            rec_head[step, i] = head[i]
    return -1


def _kernel_inputs(model: ModelKind, p: ModelParams):
    if model is ModelKind.SOCIAL_FORCES:
        prm = [p.sf_tau_relax, p.sf_strength, p.sf_range, p.wall_strength, p.wall_range]
    elif model is ModelKind.POWER_LAW:
        prm = [p.pl_tau_relax, p.pl_k, p.pl_tau0, p.pl_cutoff, p.pl_force_max, p.wall_strength, p.wall_range]
    elif model is ModelKind.RVO:
        prm = [p.rvo_horizon, p.rvo_neighbour_radius, p.rvo_weight]
    elif model is ModelKind.ORCA:
        prm = [p.orca_horizon, p.orca_obstacle_horizon]
    else:
        prm = [p.mou_horizon, p.mou_tau_relax]
    pattern, order = candidate_pattern(p.rvo_samples)
    offsets = heading_offsets(p.mou_headings, p.mou_angular_range)
    return np.array(prm, dtype=float), pattern, order, offsets


def integrate(state: CrowdState, model: ModelKind, walls, dt: float, n_steps: int,
              params: ModelParams = ModelParams()):
    """Advance a copy of ``state``; returns (final state, positions, heads, velocities) per recorded step."""
    model = ModelKind(model)
    s = state.copy()
    n = len(s)
    rec_pos = np.empty((n_steps, n, 2))
    rec_head = np.empty((n_steps, n))
    rec_vel = np.empty((n_steps, n, 2))
    prm, pattern, order, offsets = _kernel_inputs(model, params)
    w = walls if isinstance(walls, np.ndarray) else walls_array(list(walls))
    err = advance(
        _MODEL_CODE[model], s.pos, s.vel, s.radius, s.pref_speed, s.goal, s.head, w, prm, pattern, order, offsets,
        float(dt), int(n_steps), float(params.perception_radius), rec_pos, rec_head, rec_vel,
    )
    if err >= 0:
        step, agent = divmod(int(err), n)
        raise SimulationError(model, int(s.agent_id[agent]), step + 1)
    s.t = state.t + n_steps * dt
    return s, rec_pos, rec_head, rec_vel


def step(state: CrowdState, cfg: ScenarioConfig, params: ModelParams = ModelParams()) -> CrowdState:
    """One time step of ``cfg.dt`` under ``cfg.model``; the input state is left untouched."""
    out, *_ = integrate(state, cfg.model, cfg.walls(), cfg.dt, 1, params)
    return out


def preferred_velocities(state: CrowdState) -> np.ndarray:
    return np.array([
        pref_velocity(p[0], p[1], g[0], g[1], s) for p, g, s in zip(state.pos, state.goal, state.pref_speed)
    ]).reshape(-1, 2)


@dataclass
class RunResult:
    cfg: ScenarioConfig
    params: ModelParams
    times: np.ndarray  # (T,)
    positions: np.ndarray  # (T, n, 2)
    velocities: np.ndarray  # (T, n, 2)
    heads: np.ndarray  # (T, n)
    agent_id: np.ndarray
    group_id: np.ndarray
    radius: np.ndarray

    def raw_trajectories(self) -> list[Trajectory]:
        return [
            Trajectory(int(a), int(g), self.times, self.positions[:, i, 0], self.positions[:, i, 1], self.heads[:, i],
                       self.cfg.dt)
            for i, (a, g) in enumerate(zip(self.agent_id, self.group_id))
        ]

    def trajectories(self, dt_sample: float | None = None) -> list[Trajectory]:
        """Trajectories resampled on the risk-evaluation base (``cfg.dt_sample`` by default)."""
        d = self.cfg.dt_sample if dt_sample is None else dt_sample
        return [resample(tr, d) for tr in self.raw_trajectories()]


def run_from_state(state: CrowdState, cfg: ScenarioConfig, params: ModelParams = ModelParams(),
                   walls=None) -> RunResult:
    walls = cfg.walls() if walls is None else walls
    n_steps = cfg.n_steps
    _, rec_pos, rec_head, rec_vel = integrate(state, cfg.model, walls, cfg.dt, n_steps, params)
    times = state.t + cfg.dt * np.arange(n_steps + 1)
    positions = np.concatenate([state.pos[None], rec_pos])
    heads = np.concatenate([wrap_angle(state.head)[None], rec_head])
    vels = np.concatenate([state.vel[None], rec_vel])
    return RunResult(cfg, params, times, positions, vels, heads, state.agent_id.copy(), state.group_id.copy(),
                     state.radius.copy())


def run(cfg: ScenarioConfig, params: ModelParams = ModelParams()) -> RunResult:
    """Simulate the corridor scenario for ``cfg.duration`` seconds."""
    return run_from_state(init_corridor(cfg), cfg, params)
