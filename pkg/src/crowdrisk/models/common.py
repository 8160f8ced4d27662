from __future__ import annotations

import math

import numpy as np
from numba import njit

from .geometry import closest_on_segment, walls_array

# within this distance of its goal an agent slows down linearly
ARRIVAL_RADIUS = 1.0
# 1/s^2, linear push-back once discs touch each other or a wall
CONTACT_STIFFNESS = 1000.0


@njit(cache=True)
def pref_velocity(px, py, gx, gy, speed):
    dx = gx - px
    dy = gy - py
    d = math.sqrt(dx * dx + dy * dy)
    if d < 1e-12:
        return 0.0, 0.0
    s = speed
    if d < ARRIVAL_RADIUS:
        s = speed * d / ARRIVAL_RADIUS
    return s * dx / d, s * dy / d


@njit(cache=True)
def wall_repulsion(px, py, r, walls, strength, rng):
    """Short-range exponential push away from every wall segment, stiffened on contact."""
    ax = 0.0
    ay = 0.0
    for w in range(walls.shape[0]):
        qx, qy = closest_on_segment(px, py, walls[w, 0], walls[w, 1], walls[w, 2], walls[w, 3])
        dx = px - qx
        dy = py - qy
        d = math.sqrt(dx * dx + dy * dy)
        if d < 1e-12:
            continue
        f = strength * math.exp((r - d) / rng)
        if d < r:
            f += CONTACT_STIFFNESS * (r - d)
        ax += f * dx / d
        ay += f * dy / d
    return ax, ay


def pack(agent, neighbours):
    """Arrays for one agent (index 0) and its neighbours (1..k), for the per-agent kernels."""
    everyone = [agent, *neighbours]
    pos = np.array([a.pos for a in everyone], dtype=float)
    vel = np.array([a.vel for a in everyone], dtype=float)
    radius = np.array([a.radius for a in everyone], dtype=float)
    pref = np.array([a.pref_speed for a in everyone], dtype=float)
    goal = np.array([a.goal for a in everyone], dtype=float)
    nbr = np.arange(1, len(everyone), dtype=np.int64)
    return pos, vel, radius, pref, goal, nbr


def pack_walls(walls):
    return walls_array(list(walls or []))
