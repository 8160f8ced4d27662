"""Collision-time and segment geometry shared by the steering models."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from ..core import Vec2

INF = math.inf


@dataclass(frozen=True)
class Wall:
    a: Vec2
    b: Vec2

    def __post_init__(self):
        object.__setattr__(self, "a", Vec2(*self.a))
        object.__setattr__(self, "b", Vec2(*self.b))
        if self.a == self.b:
            raise ValueError("wall endpoints coincide")


@dataclass(frozen=True)
class HalfPlane:
    """Permitted set {v : (v - point) . normal >= 0}."""

    point: Vec2
    normal: Vec2

    def __post_init__(self):
        object.__setattr__(self, "point", Vec2(*self.point))
        object.__setattr__(self, "normal", Vec2(*self.normal))
        if abs(self.normal.norm() - 1.0) > 1e-9:
            raise ValueError("half-plane normal must be a unit vector")

    def violation(self, v) -> float:
        """Distance by which ``v`` lies outside the half-plane (<= 0 when inside)."""
        return -((v[0] - self.point.x) * self.normal.x + (v[1] - self.point.y) * self.normal.y)


def walls_array(walls) -> np.ndarray:
    if not walls:
        return np.zeros((0, 4))
    return np.array([[w.a.x, w.a.y, w.b.x, w.b.y] for w in walls], dtype=float)


@njit(cache=True)
def ttc(px, py, vx, vy, radius):
    """Smallest t >= 0 with |p + t v| = radius; 0 when already overlapping, inf if never."""
    c = px * px + py * py - radius * radius
    if c <= 0.0:
        return 0.0
    a = vx * vx + vy * vy
    b = px * vx + py * vy
    if b >= 0.0 or a == 0.0:
        return INF
    disc = b * b - a * c
    if disc <= 0.0:
        return INF
    return (-b - math.sqrt(disc)) / a


@njit(cache=True)
def ttc_escape(px, py, vx, vy, radius):
    """Like ``ttc`` but an overlapping pair only counts as colliding while it still closes in."""
    c = px * px + py * py - radius * radius
    if c <= 0.0:
        if px * vx + py * vy < 0.0:
            return 0.0
        return INF
    return ttc(px, py, vx, vy, radius)


@njit(cache=True)
def closest_on_segment(px, py, ax, ay, bx, by):
    ex = bx - ax
    ey = by - ay
    ll = ex * ex + ey * ey
    s = ((px - ax) * ex + (py - ay) * ey) / ll
    if s < 0.0:
        s = 0.0
    elif s > 1.0:
        s = 1.0
    return ax + s * ex, ay + s * ey


@njit(cache=True)
def ttc_segment(px, py, vx, vy, radius, ax, ay, bx, by):
    """Time until a disc at p moving with v touches the static segment ab."""
    qx, qy = closest_on_segment(px, py, ax, ay, bx, by)
    dx = px - qx
    dy = py - qy
    if dx * dx + dy * dy <= radius * radius:
        # overlapping: colliding only while moving further into the wall
        if dx * vx + dy * vy < 0.0:
            return 0.0
        return INF
    best = ttc(ax - px, ay - py, -vx, -vy, radius)
    t2 = ttc(bx - px, by - py, -vx, -vy, radius)
    if t2 < best:
        best = t2
    # interior: the offset line at distance radius on the agent's side
    ex = bx - ax
    ey = by - ay
    ll = math.sqrt(ex * ex + ey * ey)
    nx = -ey / ll
    ny = ex / ll
    dist = (px - ax) * nx + (py - ay) * ny
    if dist < 0.0:
        nx = -nx
        ny = -ny
        dist = -dist
    vn = vx * nx + vy * ny
    if vn < 0.0 and dist > radius:
        t = (dist - radius) / -vn
        hx = px + t * vx
        hy = py + t * vy
        s = ((hx - ax) * ex + (hy - ay) * ey) / (ll * ll)
        if 0.0 <= s <= 1.0 and t < best:
            best = t
    return best


def time_to_collision(pos_rel, vel_rel, combined_radius: float) -> float:
    """Delay before two discs touch if both keep their velocities.

    ``pos_rel`` and ``vel_rel`` are the other agent's position and velocity
    relative to this one. Returns ``inf`` if no contact lies ahead and ``0.0``
    when the discs already overlap (see :func:`overlapping`).
    """
    vals = (pos_rel[0], pos_rel[1], vel_rel[0], vel_rel[1], combined_radius)
    if any(math.isnan(v) for v in vals):
        raise ValueError("time_to_collision received NaN input")
    if combined_radius <= 0:
        raise ValueError("combined radius must be positive")
    return float(ttc(*(float(v) for v in vals)))


def overlapping(pos_rel, combined_radius: float) -> bool:
    return pos_rel[0] ** 2 + pos_rel[1] ** 2 <= combined_radius**2
