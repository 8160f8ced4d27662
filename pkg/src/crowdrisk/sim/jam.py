from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import Trajectory, velocities

JAM_HALF_WINDOW = 2.0  # m around the corridor centre
JAM_SPEED = 0.2  # m/s
JAM_MIN_COUNT = 15
JAM_MIN_DURATION = 1.0  # s


@dataclass
class JamReport:
    intervals: list[tuple[float, float]] = field(default_factory=list)
    peak_jammed_count: int = 0

    @property
    def jammed(self) -> bool:
        return bool(self.intervals)

    @property
    def total_seconds(self) -> float:
        return float(sum(b - a for a, b in self.intervals))

    def to_text(self) -> str:
        lines = [f"jammed {int(self.jammed)}", f"jam_seconds {self.total_seconds!r}",
                 f"peak_jammed_count {self.peak_jammed_count}"]
        lines += [f"interval {a!r} {b!r}" for a, b in self.intervals]
        return "\n".join(lines) + "\n"


def slow_central_counts(trajs: list[Trajectory], x_mid: float) -> tuple[np.ndarray, np.ndarray]:
    if not trajs:
        return np.zeros(0), np.zeros(0, dtype=int)
    t = trajs[0].t
    for tr in trajs[1:]:
        if len(tr.t) != len(t) or not np.allclose(tr.t, t, rtol=0, atol=1e-9):
            raise ValueError("trajectories do not share a common time base")
    x = np.stack([tr.x for tr in trajs])
    speed = np.stack([np.hypot(*velocities(tr).T) for tr in trajs])
    slow = (np.abs(x - x_mid) <= JAM_HALF_WINDOW) & (speed < JAM_SPEED)
    return t, slow.sum(axis=0)


def detect_jam(trajs: list[Trajectory], cfg=None, x_mid: float | None = None) -> JamReport:
    """Maximal periods of at least 1 s with 15 or more slow agents near the corridor centre."""
    if x_mid is None:
        x_mid = cfg.x_mid if cfg is not None else 5.0
    t, counts = slow_central_counts(trajs, x_mid)
    report = JamReport()
    i = 0
    n = len(counts)
    while i < n:
        if counts[i] < JAM_MIN_COUNT:
            i += 1
            continue
        j = i
        while j + 1 < n and counts[j + 1] >= JAM_MIN_COUNT:
            j += 1
        if t[j] - t[i] >= JAM_MIN_DURATION - 1e-9:
            report.intervals.append((float(t[i]), float(t[j])))
            report.peak_jammed_count = max(report.peak_jammed_count, int(counts[i:j + 1].max()))
        i = j + 1
    return report
