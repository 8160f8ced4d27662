"""Heuristic heading/speed selection in the style of Moussaid et al.

For each candidate heading the agent predicts how far it could walk before
its first collision, ``f(alpha)`` (capped at the horizon ``d_max``), and picks
the heading whose endpoint lands closest to the goal direction, i.e. the one
minimising ``d_max**2 + f**2 - 2 d_max f cos(alpha)``.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from numba import njit

from .common import pack, pack_walls, pref_velocity
from .geometry import ttc_escape, ttc_segment
from .params import ModelParams


@lru_cache(maxsize=None)
def heading_offsets(count: int, angular_range: float) -> np.ndarray:
    """Offsets 0, +d, -d, +2d, -2d, ... spanning [-range, +range]."""
    half = count // 2
    step = angular_range / half if half else 0.0
    out = [0.0]
    for m in range(1, half + 1):
        out += [m * step, -m * step]
    arr = np.array(out)
    arr.setflags(write=False)
    return arr


@njit(cache=True)
def moussaid_heading(i, pos, vel, radius, pref, goal, head, nbr, walls, offsets, horizon, tau_relax):
    """Returns (cos, sin) of the chosen heading, its offset from the goal direction and the speed."""
    px = pos[i, 0]
    py = pos[i, 1]
    vpx, vpy = pref_velocity(px, py, goal[i, 0], goal[i, 1], pref[i])
    v0 = math.sqrt(vpx * vpx + vpy * vpy)
    if v0 > 0.0:
        cg = vpx / v0
        sg = vpy / v0
    else:
        cg = math.cos(head[i])
        sg = math.sin(head[i])
    best = math.inf
    best_f = horizon
    best_c = cg
    best_s = sg
    best_a = 0.0
    for k in range(offsets.shape[0]):
        a = offsets[k]
        ca = math.cos(a)
        sa = math.sin(a)
        ex = cg * ca - sg * sa
        ey = sg * ca + cg * sa
        f = horizon
        if v0 > 0.0:
            for q in range(nbr.shape[0]):
                j = nbr[q]
                t = ttc_escape(pos[j, 0] - px, pos[j, 1] - py, vel[j, 0] - v0 * ex, vel[j, 1] - v0 * ey,
                               radius[i] + radius[j])
                if t * v0 < f:
                    f = t * v0
            for w in range(walls.shape[0]):
                t = ttc_segment(px, py, v0 * ex, v0 * ey, radius[i], walls[w, 0], walls[w, 1], walls[w, 2], walls[w, 3])
                if t * v0 < f:
                    f = t * v0
        cost = horizon * horizon + f * f - 2.0 * horizon * f * ca
        if cost < best:
            best = cost
            best_f = f
            best_c = ex
            best_s = ey
            best_a = a
    speed = min(v0, best_f / tau_relax)
    return best_c, best_s, best_a, speed


def moussaid_select(agent, neighbours, walls, p: ModelParams = ModelParams()) -> tuple[float, float]:
    """Chosen heading (absolute angle, radians) and walking speed (m/s)."""
    pos, vel, radius, pref, goal, nbr = pack(agent, neighbours)
    head = np.array([agent.head_angle] * len(pos))
    offsets = heading_offsets(p.mou_headings, p.mou_angular_range)
    c, s, _, speed = moussaid_heading(
        0, pos, vel, radius, pref, goal, head, nbr, pack_walls(walls), offsets, p.mou_horizon, p.mou_tau_relax,
    )
    return math.atan2(s, c), float(speed)
