"""Sampling-based reciprocal velocity obstacles.

Every agent scores a fixed candidate set (its preferred velocity, rest, and
a golden-ratio pattern over the disc of radius ``pref_speed``) with
``w / ttc + |candidate - v_pref|`` and keeps the cheapest one.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from numba import njit

from ..core import Vec2
from .common import pack, pack_walls, pref_velocity
from .geometry import ttc_escape, ttc_segment
from .params import ModelParams

GOLDEN = (1.0 + math.sqrt(5.0)) / 2.0


@lru_cache(maxsize=None)
def candidate_pattern(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Unit-disc pattern in the goal frame (x along the preferred direction).

    Index 0 is the preferred velocity and index 1 is rest; the remaining
    points come in mirrored pairs (+theta, -theta) so the set is symmetric
    about the goal axis. Returns (points, evaluation order by distance to
    the preferred velocity).
    """
    pairs = max(n - 2, 0) // 2
    pts = [(1.0, 0.0), (0.0, 0.0)]
    for m in range(pairs):
        r = math.sqrt((m + 0.5) / pairs)
        theta = math.pi * (((m + 0.5) / GOLDEN) % 1.0)
        c, s = r * math.cos(theta), r * math.sin(theta)
        pts.append((c, s))
        pts.append((c, -s))
    pts_arr = np.array(pts, dtype=float)
    dev = np.hypot(pts_arr[:, 0] - 1.0, pts_arr[:, 1])
    order = np.argsort(dev, kind="stable").astype(np.int64)
    pts_arr.setflags(write=False)
    order.setflags(write=False)
    return pts_arr, order


@njit(cache=True)
def rvo_velocity(i, pos, vel, radius, pref, goal, head, nbr, walls, pattern, order,
                 horizon, neighbour_radius, weight):
    px = pos[i, 0]
    py = pos[i, 1]
    vx = vel[i, 0]
    vy = vel[i, 1]
    vpx, vpy = pref_velocity(px, py, goal[i, 0], goal[i, 1], pref[i])
    sp = math.sqrt(vpx * vpx + vpy * vpy)
    if sp > 0.0:
        cphi = vpx / sp
        sphi = vpy / sp
    else:
        cphi = math.cos(head[i])
        sphi = math.sin(head[i])
    scale = pref[i]
    nr2 = neighbour_radius * neighbour_radius
    best = math.inf
    best_k = -1
    bx = 0.0
    by = 0.0
    for m in range(order.shape[0]):
        k = order[m]
        if k == 0:
            cx = vpx
            cy = vpy
        else:
            ux = pattern[k, 0] * scale
            uy = pattern[k, 1] * scale
            cx = cphi * ux - sphi * uy
            cy = sphi * ux + cphi * uy
        dev = math.sqrt((cx - vpx) ** 2 + (cy - vpy) ** 2)
        if dev > best:
            continue
        # reciprocal: the candidate is tested as 2*cand - v against the neighbour
        rx = 2.0 * cx - vx
        ry = 2.0 * cy - vy
        tmin = math.inf
        for q in range(nbr.shape[0]):
            j = nbr[q]
            dx = pos[j, 0] - px
            dy = pos[j, 1] - py
            if dx * dx + dy * dy > nr2:
                continue
            t = ttc_escape(dx, dy, vel[j, 0] - rx, vel[j, 1] - ry, radius[i] + radius[j])
            if t < tmin:
                tmin = t
        for w in range(walls.shape[0]):
            t = ttc_segment(px, py, cx, cy, radius[i], walls[w, 0], walls[w, 1], walls[w, 2], walls[w, 3])
            if t < tmin:
                tmin = t
        pen = dev
        if tmin < horizon:
            pen += weight / max(tmin, 1e-6)
        if pen < best or (pen == best and k < best_k):
            best = pen
            best_k = k
            bx = cx
            by = cy
    return bx, by


def rvo_select_velocity(agent, neighbours, walls, dt: float, p: ModelParams = ModelParams()) -> Vec2:
    """Velocity chosen by ``agent``; ``dt`` is unused by the sampling scheme."""
    pos, vel, radius, pref, goal, nbr = pack(agent, neighbours)
    head = np.array([agent.head_angle] * len(pos))
    pattern, order = candidate_pattern(p.rvo_samples)
    x, y = rvo_velocity(
        0, pos, vel, radius, pref, goal, head, nbr, pack_walls(walls), pattern, order,
        p.rvo_horizon, p.rvo_neighbour_radius, p.rvo_weight,
    )
    return Vec2(float(x), float(y))
