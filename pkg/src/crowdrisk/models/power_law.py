"""Anticipatory power-law interactions driven by the time to collision.

The pair energy is ``k * tau**-2 * exp(-tau / tau0)``; the avoidance force is
minus its gradient with respect to the relative position.
"""

from __future__ import annotations

import math

from numba import njit

from ..core import Vec2
from .common import pack, pack_walls, pref_velocity, wall_repulsion
from .params import ModelParams


def interaction_energy(tau: float, k: float, tau0: float) -> float:
    if math.isinf(tau):
        return 0.0
    return k * tau**-2 * math.exp(-tau / tau0)


@njit(cache=True)
def pair_force(xx, xy, vx, vy, rad, k, tau0, cutoff, fmax):
    """Force on the agent at relative position x (self - other), relative velocity v."""
    c = xx * xx + xy * xy - rad * rad
    if c <= 0.0:
        d = math.sqrt(xx * xx + xy * xy)
        if d < 1e-12:
            return fmax, 0.0
        return fmax * xx / d, fmax * xy / d
    a = vx * vx + vy * vy
    b = -(xx * vx + xy * vy)
    if b <= 0.0 or a == 0.0:
        return 0.0, 0.0
    disc = b * b - a * c
    if disc <= 0.0:
        return 0.0, 0.0
    sq = math.sqrt(disc)
    tau = (b - sq) / a
    if tau >= cutoff:
        return 0.0, 0.0
    if tau <= 0.0:
        d = math.sqrt(xx * xx + xy * xy)
        return fmax * xx / d, fmax * xy / d
    mag = k * math.exp(-tau / tau0) / (a * tau * tau) * (2.0 / tau + 1.0 / tau0)
    fx = mag * (-vx + (a * xx + b * vx) / sq)
    fy = mag * (-vy + (a * xy + b * vy) / sq)
    f = math.sqrt(fx * fx + fy * fy)
    if f > fmax:
        fx *= fmax / f
        fy *= fmax / f
    return fx, fy


@njit(cache=True)
def pl_accel(i, pos, vel, radius, pref, goal, nbr, walls, tau_relax, k, tau0, cutoff, fmax, wall_strength, wall_rng):
    px = pos[i, 0]
    py = pos[i, 1]
    ex, ey = pref_velocity(px, py, goal[i, 0], goal[i, 1], pref[i])
    ax = (ex - vel[i, 0]) / tau_relax
    ay = (ey - vel[i, 1]) / tau_relax
    for m in range(nbr.shape[0]):
        j = nbr[m]
        fx, fy = pair_force(
            px - pos[j, 0], py - pos[j, 1], vel[i, 0] - vel[j, 0], vel[i, 1] - vel[j, 1],
            radius[i] + radius[j], k, tau0, cutoff, fmax,
        )
        ax += fx
        ay += fy
    if walls.shape[0] > 0:
        wx, wy = wall_repulsion(px, py, radius[i], walls, wall_strength, wall_rng)
        ax += wx
        ay += wy
    return ax, ay


def power_law_accel(agent, neighbours, walls, p: ModelParams = ModelParams()) -> Vec2:
    pos, vel, radius, pref, goal, nbr = pack(agent, neighbours)
    ax, ay = pl_accel(
        0, pos, vel, radius, pref, goal, nbr, pack_walls(walls),
        p.pl_tau_relax, p.pl_k, p.pl_tau0, p.pl_cutoff, p.pl_force_max, p.wall_strength, p.wall_range,
    )
    return Vec2(float(ax), float(ay))
