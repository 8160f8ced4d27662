"""Optimal reciprocal collision avoidance: one half-plane per neighbour, then a 2D LP."""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from ..core import Vec2
from .common import pack, pack_walls, pref_velocity
from .geometry import HalfPlane, closest_on_segment
from .lp import solve_lines
from .params import ModelParams


@njit(cache=True)
def orca_line(pix, piy, vix, viy, pjx, pjy, vjx, vjy, rad, horizon, dt):
    """Directed constraint line (px, py, dx, dy) for agent i against j; permitted side on the left."""
    rpx = pjx - pix
    rpy = pjy - piy
    rvx = vix - vjx
    rvy = viy - vjy
    dist_sq = rpx * rpx + rpy * rpy
    r_sq = rad * rad
    if dist_sq > r_sq:
        inv_t = 1.0 / horizon
        wx = rvx - inv_t * rpx
        wy = rvy - inv_t * rpy
        w_sq = wx * wx + wy * wy
        dot1 = wx * rpx + wy * rpy
        if dot1 < 0.0 and dot1 * dot1 > r_sq * w_sq:
            # closest boundary point is on the cut-off circle
            wl = math.sqrt(w_sq)
            ux = wx / wl
            uy = wy / wl
            dx = uy
            dy = -ux
            k = rad * inv_t - wl
            u_x = k * ux
            u_y = k * uy
        else:
            leg = math.sqrt(dist_sq - r_sq)
            if rpx * wy - rpy * wx > 0.0:
                dx = (rpx * leg - rpy * rad) / dist_sq
                dy = (rpx * rad + rpy * leg) / dist_sq
            else:
                dx = -(rpx * leg + rpy * rad) / dist_sq
                dy = -(-rpx * rad + rpy * leg) / dist_sq
            d2 = rvx * dx + rvy * dy
            u_x = d2 * dx - rvx
            u_y = d2 * dy - rvy
    else:
        # already overlapping: resolve within one time step
        inv_t = 1.0 / dt
        wx = rvx - inv_t * rpx
        wy = rvy - inv_t * rpy
        wl = math.sqrt(wx * wx + wy * wy)
        if wl < 1e-12:
            wx = -rpx
            wy = -rpy
            wl = math.sqrt(wx * wx + wy * wy)
            if wl < 1e-12:
                wx = -1.0
                wy = 0.0
                wl = 1.0
        ux = wx / wl
        uy = wy / wl
        dx = uy
        dy = -ux
        k = rad * inv_t - wl
        u_x = k * ux
        u_y = k * uy
    return vix + 0.5 * u_x, viy + 0.5 * u_y, dx, dy, u_x, u_y


@njit(cache=True)
def wall_line(px, py, r, ax, ay, bx, by, horizon, dt):
    qx, qy = closest_on_segment(px, py, ax, ay, bx, by)
    nx = px - qx
    ny = py - qy
    d = math.sqrt(nx * nx + ny * ny)
    if d < 1e-12:
        return 0.0, 0.0, 0.0, 0.0, False
    nx /= d
    ny /= d
    if d > r:
        s = -(d - r) / horizon
    else:
        s = (r - d) / dt
    return s * nx, s * ny, ny, -nx, True


@njit(cache=True)
def orca_velocity(i, pos, vel, radius, pref, goal, nbr, walls, horizon, obstacle_horizon, dt, lines):
    px = pos[i, 0]
    py = pos[i, 1]
    n = 0
    for w in range(walls.shape[0]):
        lx, ly, dx, dy, ok = wall_line(px, py, radius[i], walls[w, 0], walls[w, 1], walls[w, 2], walls[w, 3],
                                       obstacle_horizon, dt)
        if ok:
            lines[n, 0] = lx
            lines[n, 1] = ly
            lines[n, 2] = dx
            lines[n, 3] = dy
            n += 1
    n_fixed = n
    for q in range(nbr.shape[0]):
        j = nbr[q]
        lx, ly, dx, dy, _, _ = orca_line(px, py, vel[i, 0], vel[i, 1], pos[j, 0], pos[j, 1], vel[j, 0], vel[j, 1],
                                         radius[i] + radius[j], horizon, dt)
        lines[n, 0] = lx
        lines[n, 1] = ly
        lines[n, 2] = dx
        lines[n, 3] = dy
        n += 1
    vpx, vpy = pref_velocity(px, py, goal[i, 0], goal[i, 1], pref[i])
    return solve_lines(lines, n, n_fixed, vpx, vpy, pref[i])


def orca_halfplane(agent, other, time_horizon: float, dt: float) -> HalfPlane:
    """Permitted velocities of ``agent`` with respect to ``other`` (half the avoidance effort)."""
    lx, ly, dx, dy, _, _ = orca_line(
        agent.pos.x, agent.pos.y, agent.vel.x, agent.vel.y,
        other.pos.x, other.pos.y, other.vel.x, other.vel.y,
        agent.radius + other.radius, time_horizon, dt,
    )
    return HalfPlane(Vec2(float(lx), float(ly)), Vec2(float(-dy), float(dx)))


def orca_escape_vector(agent, other, time_horizon: float, dt: float) -> Vec2:
    """Smallest change ``u`` of the relative velocity that leaves the truncated velocity obstacle."""
    *_, ux, uy = orca_line(
        agent.pos.x, agent.pos.y, agent.vel.x, agent.vel.y,
        other.pos.x, other.pos.y, other.vel.x, other.vel.y,
        agent.radius + other.radius, time_horizon, dt,
    )
    return Vec2(float(ux), float(uy))


def orca_select_velocity(agent, neighbours, walls, dt: float, p: ModelParams = ModelParams()) -> Vec2:
    pos, vel, radius, pref, goal, nbr = pack(agent, neighbours)
    w = pack_walls(walls)
    lines = np.empty((len(w) + len(nbr), 4))
    x, y = orca_velocity(0, pos, vel, radius, pref, goal, nbr, w, p.orca_horizon, p.orca_obstacle_horizon, dt, lines)
    return Vec2(float(x), float(y))
