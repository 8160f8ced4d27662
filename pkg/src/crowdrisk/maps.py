"""Spatio-temporal concentration maps around an isolated emitter.

A map stores the concentration per unit emission ``C(x, y, tau)`` on a
regular grid in the emitter's head frame (x along the head direction),
``tau`` seconds after emission. Maps are grouped into a library indexed by
exhalation mode and binned relative wind. The analytic puff surrogate below
fills the library when no CFD-derived maps are available.

On disk a map is a ``CMAP1`` text file::

    CMAP1
    <mode>
    <vx> <vy>
    <nx> <ny> <nt> <dx> <dy> <dtau> <x0> <y0>
    nt blocks of ny lines of nx numbers (row-major, block k = tau k*dtau)
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numba import njit

from .core import Vec2

log = logging.getLogger(__name__)

CUTOFF_RADIUS = 4.0  # m, transmission beyond this distance is discarded
MAGIC = "CMAP1"
SPEED_BINS = (0.0, 0.25, 0.5, 1.0, 2.0)  # m/s
ANGLE_STEP = 30  # degrees
ANGLE_BINS = tuple(range(0, 360, ANGLE_STEP))
# puffs are cut at this many standard deviations (drops a 1e-8 mass fraction, keeps files small)
PUFF_TRUNCATION = 6.0


class ExhalationMode(str, enum.Enum):
    BREATHING = "breathing"
    SPEAKING = "speaking"
    LARGE_DROPLETS = "large_droplets"

    @classmethod
    def parse(cls, token: str) -> "ExhalationMode":
        try:
            return cls(token.strip().lower())
        except ValueError:
            choices = " / ".join(m.value for m in cls)
            raise ValueError(f"unknown exhalation mode {token!r} (choose between: {choices})") from None


class MapFormatError(ValueError):
    def __init__(self, source, lineno, message):
        super().__init__(f"{source}:{lineno}: {message}" if lineno else f"{source}: {message}")
        self.lineno = lineno


@dataclass(frozen=True)
class GridSpec:
    x0: float = -1.0
    y0: float = -2.5
    nx: int = 51
    ny: int = 51
    dx: float = 0.1
    dy: float = 0.1
    nt: int = 81
    dtau: float = 0.25

    def __post_init__(self):
        if min(self.nx, self.ny, self.nt) < 1:
            raise ValueError("grid counts must be >= 1")
        if min(self.dx, self.dy, self.dtau) <= 0:
            raise ValueError("grid spacings must be positive")

    @classmethod
    def covering(cls, x_range=(-1.0, 4.0), y_range=(-2.5, 2.5), tau_end=20.0, dx=0.1, dtau=0.25) -> "GridSpec":
        nx = int(round((x_range[1] - x_range[0]) / dx)) + 1
        ny = int(round((y_range[1] - y_range[0]) / dx)) + 1
        nt = int(round(tau_end / dtau)) + 1
        return cls(x_range[0], y_range[0], nx, ny, dx, dx, nt, dtau)

    @property
    def xs(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.nx)

    @property
    def ys(self) -> np.ndarray:
        return self.y0 + self.dy * np.arange(self.ny)

    @property
    def taus(self) -> np.ndarray:
        return self.dtau * np.arange(self.nt)

    @property
    def tau_end(self) -> float:
        return self.dtau * (self.nt - 1)


@dataclass(frozen=True)
class PuffParams:
    q_breathing: float = 1.0
    q_speaking: float = 5.0
    q_large_droplets: float = 10.0
    u_jet: float = 1.0  # m/s
    tau_jet: float = 1.0  # s
    sigma0: float = 0.10  # m
    spread: float = 0.12  # m/sqrt(s)
    decay: float = 1.0 / 60.0  # 1/s
    tau_max: float = 20.0  # s
    droplet_range: float = 1.5  # m
    droplet_half_angle: float = math.radians(30.0)

    def __post_init__(self):
        for name, v in vars(self).items():
            if not v > 0:
                raise ValueError(f"puff parameter {name} must be positive")

    def strength(self, mode: ExhalationMode) -> float:
        return {
            ExhalationMode.BREATHING: self.q_breathing,
            ExhalationMode.SPEAKING: self.q_speaking,
            ExhalationMode.LARGE_DROPLETS: self.q_large_droplets,
        }[ExhalationMode(mode)]

    def centroid(self, rel_wind, tau):
        """Puff centre after ``tau`` s: wind advection plus the decelerating exhalation jet."""
        jet = self.u_jet * self.tau_jet * (1.0 - np.exp(-np.asarray(tau) / self.tau_jet))
        return rel_wind[0] * np.asarray(tau) + jet, rel_wind[1] * np.asarray(tau)

    def sigma(self, tau):
        return self.sigma0 + self.spread * np.sqrt(tau)


@dataclass
class ConcentrationMap:
    mode: ExhalationMode
    rel_wind: Vec2
    grid: GridSpec
    values: np.ndarray = field(repr=False)  # (nt, ny, nx)

    def __post_init__(self):
        self.mode = ExhalationMode(self.mode)
        self.rel_wind = Vec2(*self.rel_wind)
        self.values = np.ascontiguousarray(self.values, dtype=float)
        g = self.grid
        if self.values.shape != (g.nt, g.ny, g.nx):
            raise ValueError(f"values shape {self.values.shape} does not match grid {(g.nt, g.ny, g.nx)}")

    def __eq__(self, other):
        if not isinstance(other, ConcentrationMap):
            return NotImplemented
        return (
            self.mode == other.mode
            and self.rel_wind == other.rel_wind
            and self.grid == other.grid
            and np.array_equal(self.values, other.values)
        )

    def mass(self, k: int) -> float:
        """Integral of the k-th time slice (rectangle rule)."""
        return float(self.values[k].sum() * self.grid.dx * self.grid.dy)


def _beyond_cutoff(grid: GridSpec) -> np.ndarray:
    X, Y = np.meshgrid(grid.xs, grid.ys)
    return X * X + Y * Y > CUTOFF_RADIUS**2


def generate_surrogate_map(mode, rel_wind, grid: GridSpec = GridSpec(), p: PuffParams = PuffParams(),
                           clip: bool = True) -> ConcentrationMap:
    """Analytic Gaussian puff: advected by the relative wind, pushed forward by the
    exhalation jet, spreading as sigma0 + spread*sqrt(tau) and decaying exponentially.

    ``clip=False`` skips the 4 m cut-off (useful to check mass conservation).
    """
    mode = ExhalationMode(mode)
    if grid.tau_end > p.tau_max + 1e-9:
        raise ValueError("grid extends beyond the puff lifetime tau_max")
    q = p.strength(mode)
    X, Y = np.meshgrid(grid.xs, grid.ys)
    taus = grid.taus
    mx, my = p.centroid(rel_wind, taus)
    sig = p.sigma(taus)
    values = np.empty((grid.nt, grid.ny, grid.nx))
    for k in range(grid.nt):
        r2 = (X - mx[k]) ** 2 + (Y - my[k]) ** 2
        g = np.exp(-r2 / (2.0 * sig[k] ** 2))
        g[r2 > (PUFF_TRUNCATION * sig[k]) ** 2] = 0.0
        values[k] = q * g / (2.0 * math.pi * sig[k] ** 2) * math.exp(-p.decay * taus[k])
    if mode is ExhalationMode.LARGE_DROPLETS:
        dist = np.hypot(X, Y)
        frontal = (dist <= p.droplet_range) & (np.abs(np.arctan2(Y, X)) <= p.droplet_half_angle + 1e-12)
        values *= frontal[None]
    if clip:
        values[:, _beyond_cutoff(grid)] = 0.0
    return ConcentrationMap(mode, Vec2(*map(float, rel_wind)), grid, values)


@njit(cache=True)
def _axis(q, origin, step, n):
    """Cell index and fraction along one axis; index -1 when outside."""
    if n == 1:
        if q == origin:
            return 0, 0.0
        return -1, 0.0
    s = (q - origin) / step
    if s < 0.0 or s > n - 1:
        return -1, 0.0
    k = int(s)
    if k >= n - 1:
        k = n - 2
    return k, s - k


@njit(cache=True)
def trilinear(values, x0, y0, dx, dy, dtau, x, y, tau):
    nt, ny, nx = values.shape
    if x * x + y * y > 16.0 or tau < 0.0:
        return 0.0
    ix, fx = _axis(x, x0, dx, nx)
    if ix < 0:
        return 0.0
    iy, fy = _axis(y, y0, dy, ny)
    if iy < 0:
        return 0.0
    it, ft = _axis(tau, 0.0, dtau, nt)
    if it < 0:
        return 0.0
    jx = ix + 1 if nx > 1 else ix
    jy = iy + 1 if ny > 1 else iy
    jt = it + 1 if nt > 1 else it
    c00 = values[it, iy, ix] * (1.0 - fx) + values[it, iy, jx] * fx
    c01 = values[it, jy, ix] * (1.0 - fx) + values[it, jy, jx] * fx
    c10 = values[jt, iy, ix] * (1.0 - fx) + values[jt, iy, jx] * fx
    c11 = values[jt, jy, ix] * (1.0 - fx) + values[jt, jy, jx] * fx
    c0 = c00 * (1.0 - fy) + c01 * fy
    c1 = c10 * (1.0 - fy) + c11 * fy
    return c0 * (1.0 - ft) + c1 * ft


def sample(cmap: ConcentrationMap, xi, tau: float) -> float:
    """Concentration at head-frame offset ``xi`` and delay ``tau``; 0 outside the support."""
    if tau < 0:
        raise ValueError("tau must be non-negative")
    g = cmap.grid
    return float(trilinear(cmap.values, g.x0, g.y0, g.dx, g.dy, g.dtau, float(xi[0]), float(xi[1]), float(tau)))


def speed_bin(speed: float) -> int:
    """Nearest speed bin, ties resolved towards the lower bin."""
    best, best_d = 0, math.inf
    for k, b in enumerate(SPEED_BINS):
        d = abs(speed - b)
        if d < best_d:
            best, best_d = k, d
    return best


def angle_bin(vx: float, vy: float) -> int:
    """Nearest 30-degree bin, ties resolved counter-clockwise."""
    deg = math.degrees(math.atan2(vy, vx)) % 360.0
    return int(math.floor(deg / ANGLE_STEP + 0.5)) % len(ANGLE_BINS)


def bin_indices(rel_wind: np.ndarray) -> np.ndarray:
    """Flat library index (speed_bin * n_angles + angle_bin) for an (n, 2) array of winds."""
    rel_wind = np.asarray(rel_wind, dtype=float).reshape(-1, 2)
    speed = np.hypot(rel_wind[:, 0], rel_wind[:, 1])
    bins = np.asarray(SPEED_BINS)
    d = np.abs(speed[:, None] - bins[None, :])
    s_idx = np.argmin(d, axis=1)  # argmin keeps the first (lower) bin on ties
    deg = np.degrees(np.arctan2(rel_wind[:, 1], rel_wind[:, 0])) % 360.0
    a_idx = np.floor(deg / ANGLE_STEP + 0.5).astype(np.int64) % len(ANGLE_BINS)
    return s_idx * len(ANGLE_BINS) + a_idx


def library_keys():
    return [(s, a) for s in SPEED_BINS for a in ANGLE_BINS]


def map_filename(speed: float, angle: int) -> str:
    return f"w{speed:g}_a{angle}.cmap"


class IncompleteLibrary(ValueError):
    pass


class MapLibrary:
    """Maps keyed by (mode, wind speed bin, wind angle bin); complete for each mode it holds."""

    def __init__(self, maps: dict):
        self.maps = dict(maps)
        self._stacks: dict = {}
        modes = {k[0] for k in self.maps}
        if not modes:
            raise IncompleteLibrary("empty map library")
        for mode in modes:
            missing = [(s, a) for s, a in library_keys() if (mode, s, a) not in self.maps]
            if missing:
                s, a = missing[0]
                raise IncompleteLibrary(
                    f"map library incomplete for {mode.value}: {len(missing)} missing, e.g. {map_filename(s, a)}"
                )
            grids = {self.maps[(mode, s, a)].grid for s, a in library_keys()}
            if len(grids) != 1:
                raise ValueError(f"maps of mode {mode.value} do not share one grid")

    @property
    def modes(self) -> list[ExhalationMode]:
        return sorted({k[0] for k in self.maps}, key=lambda m: list(ExhalationMode).index(m))

    def get(self, mode, speed, angle) -> ConcentrationMap:
        return self.maps[(ExhalationMode(mode), speed, angle)]

    def stack(self, mode) -> tuple[np.ndarray, GridSpec]:
        """All maps of one mode as one (n_bins, nt, ny, nx) array ordered like ``bin_indices``."""
        mode = ExhalationMode(mode)
        if mode not in self._stacks:
            if mode not in self.modes:
                raise KeyError(f"no maps for exhalation mode {mode.value}")
            arr = np.stack([self.maps[(mode, s, a)].values for s, a in library_keys()])
            self._stacks[mode] = (arr, self.maps[(mode, *library_keys()[0])].grid)
        return self._stacks[mode]

    @classmethod
    def uniform(cls, cmap_for) -> "MapLibrary":
        """Library built by calling ``cmap_for(mode, speed, angle)`` for every key of the given modes."""
        maps = {}
        for mode in ExhalationMode:
            for s, a in library_keys():
                m = cmap_for(mode, s, a)
                if m is not None:
                    maps[(mode, s, a)] = m
        return cls(maps)


def nearest_map(lib: MapLibrary, mode, rel_wind) -> ConcentrationMap:
    s = SPEED_BINS[speed_bin(math.hypot(rel_wind[0], rel_wind[1]))]
    a = ANGLE_BINS[angle_bin(rel_wind[0], rel_wind[1])]
    return lib.get(mode, s, a)


def generate_library(modes=tuple(ExhalationMode), grid: GridSpec = GridSpec(), p: PuffParams = PuffParams()) -> MapLibrary:
    maps = {}
    for mode in modes:
        mode = ExhalationMode(mode)
        for s, a in library_keys():
            wind = (s * math.cos(math.radians(a)), s * math.sin(math.radians(a)))
            maps[(mode, s, a)] = generate_surrogate_map(mode, wind, grid, p)
    return MapLibrary(maps)


# --- CMAP1 text format -------------------------------------------------------


def format_map(cmap: ConcentrationMap) -> str:
    g = cmap.grid
    out = [
        MAGIC,
        cmap.mode.value,
        f"{float(cmap.rel_wind.x)!r} {float(cmap.rel_wind.y)!r}",
        " ".join([str(int(g.nx)), str(int(g.ny)), str(int(g.nt))] + [repr(float(v)) for v in (g.dx, g.dy, g.dtau, g.x0, g.y0)]),
    ]
    for k in range(g.nt):
        for row in cmap.values[k]:
            out.append(" ".join(map(repr, row.tolist())))
    return "\n".join(out) + "\n"


def write_map(cmap: ConcentrationMap, path) -> None:
    Path(path).write_text(format_map(cmap))


def parse_map(text: str, source: str = "<map>") -> ConcentrationMap:
    lines = text.splitlines()
    if not lines or lines[0].strip() != MAGIC:
        raise MapFormatError(source, 1, f"bad magic, expected {MAGIC}")
    if len(lines) < 4:
        raise MapFormatError(source, len(lines) + 1, "truncated header")
    try:
        mode = ExhalationMode.parse(lines[1])
    except ValueError as exc:
        raise MapFormatError(source, 2, str(exc)) from None
    try:
        vx, vy = (float(t) for t in lines[2].split())
    except ValueError:
        raise MapFormatError(source, 3, "expected relative wind 'vx vy'") from None
    head = lines[3].split()
    try:
        if len(head) != 8:
            raise ValueError
        nx, ny, nt = (int(t) for t in head[:3])
        dx, dy, dtau, x0, y0 = (float(t) for t in head[3:])
        grid = GridSpec(x0, y0, nx, ny, dx, dy, nt, dtau)
    except ValueError:
        raise MapFormatError(source, 4, "expected 'nx ny nt dx dy dtau x0 y0'") from None
    payload = lines[4:]
    expected = nt * ny
    rows = [ln for ln in payload if ln.strip()]
    if len(rows) < expected:
        raise MapFormatError(source, 4 + len(payload) + 1, f"truncated payload: {len(rows)} of {expected} rows")
    if len(rows) > expected:
        raise MapFormatError(source, 4 + expected + 1, "unexpected data after the last row")
    try:
        values = np.array(" ".join(rows).split(), dtype=float)
    except ValueError:
        values = None
    if values is None or values.size != nt * ny * nx or not np.all(np.isfinite(values)) or np.any(values < 0):
        # locate the offending row for the message
        for k, ln in enumerate(payload):
            if not ln.strip():
                continue
            lineno = 5 + k
            toks = ln.split()
            if len(toks) != nx:
                raise MapFormatError(source, lineno, f"expected {nx} values, found {len(toks)}")
            try:
                row = np.array(toks, dtype=float)
            except ValueError:
                raise MapFormatError(source, lineno, "non-numeric value") from None
            if not np.all(np.isfinite(row)):
                raise MapFormatError(source, lineno, "non-finite value")
            if np.any(row < 0):
                raise MapFormatError(source, lineno, f"negative concentration {row[row < 0][0]!r}")
        raise MapFormatError(source, None, "malformed payload")
    values = values.reshape(nt, ny, nx)
    far = _beyond_cutoff(grid)
    if np.any(values[:, far] != 0):
        log.warning("%s: zeroing values beyond %g m", source, CUTOFF_RADIUS)
        values[:, far] = 0.0
    return ConcentrationMap(mode, Vec2(vx, vy), grid, values)


def read_map(path) -> ConcentrationMap:
    path = Path(path)
    return parse_map(path.read_text(), str(path))


def write_library(lib: MapLibrary, folder) -> list[Path]:
    folder = Path(folder)
    written = []
    for mode in lib.modes:
        d = folder / mode.value
        d.mkdir(parents=True, exist_ok=True)
        for s, a in library_keys():
            path = d / map_filename(s, a)
            write_map(lib.get(mode, s, a), path)
            written.append(path)
    return written


def load_library(folder, modes=None) -> MapLibrary:
    """Read ``<folder>/<mode>/w<speed>_a<angle>.cmap`` for the requested modes (default: all present)."""
    folder = Path(folder)
    if not folder.is_dir():
        raise FileNotFoundError(f"diagrams folder not found: {folder}")
    if modes is None:
        modes = [m for m in ExhalationMode if (folder / m.value).is_dir()]
        if not modes:
            raise IncompleteLibrary(f"no exhalation-mode subfolders in {folder}")
    maps = {}
    for mode in modes:
        mode = ExhalationMode(mode)
        for s, a in library_keys():
            path = folder / mode.value / map_filename(s, a)
            if not path.is_file():
                raise IncompleteLibrary(f"map library incomplete: missing {path}")
            maps[(mode, s, a)] = read_map(path)
    return MapLibrary(maps)
