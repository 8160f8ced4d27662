"""Incremental 2D linear program over half-planes and a speed disc.

Constraints are stored as directed lines ``(px, py, dx, dy)``; the permitted
side is to the left of the direction, i.e. the half-plane whose inward normal
is ``(-dy, dx)``.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from ..core import Vec2

EPS = 1e-5


@njit(cache=True)
def _det(ax, ay, bx, by):
    return ax * by - ay * bx


@njit(cache=True)
def _lp1(lines, n_lines, line_no, radius, opt_x, opt_y, direction_opt):
    px = lines[line_no, 0]
    py = lines[line_no, 1]
    dx = lines[line_no, 2]
    dy = lines[line_no, 3]
    dot = px * dx + py * dy
    disc = dot * dot + radius * radius - (px * px + py * py)
    if disc < 0.0:
        return False, 0.0, 0.0
    sq = math.sqrt(disc)
    t_left = -dot - sq
    t_right = -dot + sq
    for i in range(line_no):
        denom = _det(dx, dy, lines[i, 2], lines[i, 3])
        numer = _det(lines[i, 2], lines[i, 3], px - lines[i, 0], py - lines[i, 1])
        if abs(denom) <= EPS:
            if numer < 0.0:
                return False, 0.0, 0.0
            continue
        t = numer / denom
        if denom >= 0.0:
            t_right = min(t_right, t)
        else:
            t_left = max(t_left, t)
        if t_left > t_right:
            return False, 0.0, 0.0
    if direction_opt:
        if opt_x * dx + opt_y * dy > 0.0:
            return True, px + t_right * dx, py + t_right * dy
        return True, px + t_left * dx, py + t_left * dy
    t = dx * (opt_x - px) + dy * (opt_y - py)
    if t < t_left:
        t = t_left
    elif t > t_right:
        t = t_right
    return True, px + t * dx, py + t * dy


@njit(cache=True)
def _lp2(lines, n_lines, radius, opt_x, opt_y, direction_opt, rx, ry):
    """Returns (index of first infeasible line or n_lines, result)."""
    if direction_opt:
        rx = opt_x * radius
        ry = opt_y * radius
    elif opt_x * opt_x + opt_y * opt_y > radius * radius:
        n = math.sqrt(opt_x * opt_x + opt_y * opt_y)
        rx = opt_x / n * radius
        ry = opt_y / n * radius
    else:
        rx = opt_x
        ry = opt_y
    for i in range(n_lines):
        if _det(lines[i, 2], lines[i, 3], lines[i, 0] - rx, lines[i, 1] - ry) > 0.0:
            ok, nx, ny = _lp1(lines, n_lines, i, radius, opt_x, opt_y, direction_opt)
            if not ok:
                return i, rx, ry
            rx = nx
            ry = ny
    return n_lines, rx, ry


@njit(cache=True)
def _lp3(lines, n_lines, n_fixed, begin, radius, rx, ry):
    """Minimise the largest violation of the soft lines, keeping the first ``n_fixed`` hard."""
    distance = 0.0
    proj = np.empty((n_lines, 4))
    for i in range(begin, n_lines):
        dxi = lines[i, 2]
        dyi = lines[i, 3]
        if _det(dxi, dyi, lines[i, 0] - rx, lines[i, 1] - ry) > distance:
            n_proj = 0
            for j in range(n_fixed):
                proj[n_proj, :] = lines[j, :]
                n_proj += 1
            for j in range(n_fixed, i):
                dxj = lines[j, 2]
                dyj = lines[j, 3]
                determinant = _det(dxi, dyi, dxj, dyj)
                if abs(determinant) <= EPS:
                    if dxi * dxj + dyi * dyj > 0.0:
                        continue
                    ptx = 0.5 * (lines[i, 0] + lines[j, 0])
                    pty = 0.5 * (lines[i, 1] + lines[j, 1])
                else:
                    s = _det(dxj, dyj, lines[i, 0] - lines[j, 0], lines[i, 1] - lines[j, 1]) / determinant
                    ptx = lines[i, 0] + s * dxi
                    pty = lines[i, 1] + s * dyi
                ddx = dxj - dxi
                ddy = dyj - dyi
                nn = math.sqrt(ddx * ddx + ddy * ddy)
                proj[n_proj, 0] = ptx
                proj[n_proj, 1] = pty
                proj[n_proj, 2] = ddx / nn
                proj[n_proj, 3] = ddy / nn
                n_proj += 1
            fail, nx, ny = _lp2(proj, n_proj, radius, -dyi, dxi, True, rx, ry)
            if fail >= n_proj:
                rx = nx
                ry = ny
            distance = _det(dxi, dyi, lines[i, 0] - rx, lines[i, 1] - ry)
    return rx, ry


@njit(cache=True)
def solve_lines(lines, n_lines, n_fixed, opt_x, opt_y, v_max):
    fail, rx, ry = _lp2(lines, n_lines, v_max, opt_x, opt_y, False, 0.0, 0.0)
    if fail < n_lines:
        rx, ry = _lp3(lines, n_lines, n_fixed, fail, v_max, rx, ry)
    # guard against round-off pushing the result past the speed disc
    n = math.sqrt(rx * rx + ry * ry)
    if n > v_max:
        rx *= v_max / n
        ry *= v_max / n
    return rx, ry


def halfplanes_to_lines(constraints) -> np.ndarray:
    lines = np.empty((len(constraints), 4))
    for k, h in enumerate(constraints):
        lines[k] = (h.point[0], h.point[1], h.normal[1], -h.normal[0])
    return lines


def solve_lp2(constraints, v_pref, v_max: float) -> Vec2:
    """Velocity closest to ``v_pref`` inside every half-plane and the disc |v| <= v_max.

    When the constraints have no common point in the disc, the velocity
    minimising the largest constraint violation is returned instead.
    """
    if not v_max > 0:
        raise ValueError("v_max must be positive")
    lines = halfplanes_to_lines(constraints)
    x, y = solve_lines(lines, len(lines), 0, float(v_pref[0]), float(v_pref[1]), float(v_max))
    return Vec2(float(x), float(y))
