"""Helbing-style social forces with closing-speed amplified pair repulsion.

Touching discs additionally feel a linear body-contact force.
"""

from __future__ import annotations

import math

from numba import njit

from ..core import Vec2
from .common import CONTACT_STIFFNESS, pack, pack_walls, pref_velocity, wall_repulsion
from .params import ModelParams


@njit(cache=True)
def sf_accel(i, pos, vel, radius, pref, goal, nbr, walls, tau, strength, rng, wall_strength, wall_rng):
    px = pos[i, 0]
    py = pos[i, 1]
    vx = vel[i, 0]
    vy = vel[i, 1]
    ex, ey = pref_velocity(px, py, goal[i, 0], goal[i, 1], pref[i])
    ax = (ex - vx) / tau
    ay = (ey - vy) / tau
    for k in range(nbr.shape[0]):
        j = nbr[k]
        dx = px - pos[j, 0]
        dy = py - pos[j, 1]
        d = math.sqrt(dx * dx + dy * dy)
        if d < 1e-12:
            # coincident centres: separate along x by index order
            nx = 1.0 if i > j else -1.0
            ny = 0.0
        else:
            nx = dx / d
            ny = dy / d
        closing = -((vx - vel[j, 0]) * nx + (vy - vel[j, 1]) * ny)
        amp = 1.0 + max(0.0, closing) / 2.0
        overlap = radius[i] + radius[j] - d
        f = strength * math.exp(overlap / rng) * amp
        if overlap > 0.0:
            f += CONTACT_STIFFNESS * overlap
        ax += f * nx
        ay += f * ny
    if walls.shape[0] > 0:
        wx, wy = wall_repulsion(px, py, radius[i], walls, wall_strength, wall_rng)
        ax += wx
        ay += wy
    return ax, ay


def social_forces_accel(agent, neighbours, walls, p: ModelParams = ModelParams()) -> Vec2:
    """Acceleration (m/s^2) of ``agent`` under driving, pair and wall forces."""
    pos, vel, radius, pref, goal, nbr = pack(agent, neighbours)
    ax, ay = sf_accel(
        0, pos, vel, radius, pref, goal, nbr, pack_walls(walls),
        p.sf_tau_relax, p.sf_strength, p.sf_range, p.wall_strength, p.wall_range,
    )
    return Vec2(float(ax), float(ay))
