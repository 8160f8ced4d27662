"""Text formats around the risk assessment.

* ``InputFile.txt``: ``key=value`` lines, ``#`` comments, ``;``-separated
  multi-values expanded into one run per combination.
* trajectories: one ``<group>_<ped>.csv`` per agent, lines ``t;x;y;head``.
* reports: one folder per run with ``parameters.txt``,
  ``Risks_by_person_output_<suffix>.dat`` and ``Risks_mean_output_<suffix>.dat``.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .core import Trajectory, Vec2, resample
from .keyvalue import ParseError, parse_bool, parse_key_value_lines, parse_scalar
from .maps import ExhalationMode
from .risk import RiskReport, RunConfig

PATH_KEYS = ("DiagramsFolder", "OutputFolder", "TrajectoryFolder")
WIND_KEY = "(vx,vy)"
# multi-valued condition keys -> RunConfig field
CONDITION_KEYS = {
    "T0": "T0",
    WIND_KEY: "ambient_wind",
    "ExhalationMode": "mode",
    "IsotropicInhalation": "isotropic_inhalation",
    "ContagionAmidGroups": "contagion_amid_groups",
}
OPTIONAL_KEYS = {"dt_risk": "dt_risk", "Linearized": "linearized"}
REQUIRED_KEYS = PATH_KEYS + tuple(CONDITION_KEYS)

_PAIR = re.compile(r"^\(\s*([^,()]+?)\s*,\s*([^,()]+?)\s*\)$")
_TRAJ_NAME = re.compile(r"^(-?\d+)_(-?\d+)\.csv$")


@dataclass
class InputFileSpec:
    diagrams_folder: Path
    output_folder: Path
    trajectory_folder: Path
    configs: list[RunConfig]


def _parse_pair(token: str, source: str, lineno: int) -> Vec2:
    m = _PAIR.match(token.strip())
    if not m:
        raise ParseError(source, lineno, f"malformed pair {token.strip()!r}, expected (vx,vy)")
    return Vec2(parse_scalar(m.group(1), source, lineno), parse_scalar(m.group(2), source, lineno))


def _parse_value(key: str, token: str, source: str, lineno: int):
    if key == WIND_KEY:
        return _parse_pair(token, source, lineno)
    if key in ("T0", "dt_risk"):
        v = parse_scalar(token, source, lineno)
        if not v > 0:
            raise ParseError(source, lineno, f"{key} must be positive")
        return v
    if key == "ExhalationMode":
        try:
            return ExhalationMode.parse(token)
        except ValueError as exc:
            raise ParseError(source, lineno, str(exc)) from None
    return parse_bool(token, source, lineno)


def _split_values(value: str) -> list[str]:
    return [tok.strip() for tok in value.split(";") if tok.strip()]


def parse_input(text: str, source: str = "InputFile.txt") -> InputFileSpec:
    """Parse an input file; runs are the cartesian product of all condition lists,
    in file order with the last-listed key varying fastest."""
    paths: dict[str, str] = {}
    lists: dict[str, list] = {}
    optional: dict[str, object] = {}
    order: list[str] = []
    for lineno, key, value in parse_key_value_lines(text, source):
        if key in PATH_KEYS:
            if not value:
                raise ParseError(source, lineno, f"{key} is empty")
            paths[key] = value
        elif key in CONDITION_KEYS:
            tokens = _split_values(value)
            if not tokens:
                raise ParseError(source, lineno, f"{key} has no value")
            lists[key] = [_parse_value(key, tok, source, lineno) for tok in tokens]
            order.append(key)
        elif key in OPTIONAL_KEYS:
            optional[OPTIONAL_KEYS[key]] = _parse_value(key, value, source, lineno)
        else:
            raise ParseError(source, lineno, f"unknown key {key!r}")
    missing = [k for k in REQUIRED_KEYS if k not in paths and k not in lists]
    if missing:
        raise ParseError(source, None, f"missing required key {missing[0]}")
    configs = []
    for combo in itertools.product(*(lists[k] for k in order)):
        kw = {CONDITION_KEYS[k]: v for k, v in zip(order, combo)}
        configs.append(RunConfig(**kw, **optional))
    return InputFileSpec(
        Path(paths["DiagramsFolder"]), Path(paths["OutputFolder"]), Path(paths["TrajectoryFolder"]), configs
    )


def read_input(path) -> InputFileSpec:
    path = Path(path)
    spec = parse_input(path.read_text(), str(path))
    # relative folders are taken relative to the input file
    base = path.parent
    for name in ("diagrams_folder", "output_folder", "trajectory_folder"):
        p = getattr(spec, name)
        if not p.is_absolute():
            setattr(spec, name, base / p)
    return spec


def format_input(diagrams, output, trajectories, configs: list[RunConfig]) -> str:
    """Input file listing the distinct values of each condition across ``configs``.

    Parsing it back yields exactly ``configs`` when they form a full cartesian product.
    """
    def join(vals):
        return ";".join(vals)

    first = configs[0]
    lines = [
        f"DiagramsFolder={diagrams}",
        f"OutputFolder={output}",
        f"TrajectoryFolder={trajectories}",
        f"T0={join(dict.fromkeys(repr(c.T0) for c in configs))}",
        f"{WIND_KEY}={join(dict.fromkeys(f'({c.ambient_wind.x!r},{c.ambient_wind.y!r})' for c in configs))}",
        f"ExhalationMode={join(dict.fromkeys(c.mode.value for c in configs))}",
        f"IsotropicInhalation={join(dict.fromkeys(str(c.isotropic_inhalation) for c in configs))}",
        f"ContagionAmidGroups={join(dict.fromkeys(str(c.contagion_amid_groups) for c in configs))}",
        f"dt_risk={first.dt_risk!r}",
        f"Linearized={first.linearized}",
    ]
    return "\n".join(lines) + "\n"


# --- trajectories ------------------------------------------------------------


def parse_trajectory(text: str, agent_id: int, group_id: int, source: str = "<trajectory>") -> Trajectory:
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split(";")
        if len(parts) != 4:
            raise ParseError(source, lineno, f"expected 4 ';'-separated fields, found {len(parts)}")
        try:
            row = [float(p) for p in parts]
        except ValueError:
            raise ParseError(source, lineno, f"non-numeric field in {line!r}") from None
        if not all(np.isfinite(row)):
            raise ParseError(source, lineno, "non-finite value")
        if rows and row[0] <= rows[-1][0]:
            raise ParseError(source, lineno, f"timestamp {parts[0].strip()} does not increase")
        rows.append(row)
    if not rows:
        raise ParseError(source, None, "empty trajectory")
    a = np.array(rows)
    return Trajectory(agent_id, group_id, a[:, 0], a[:, 1], a[:, 2], a[:, 3])


def read_trajectory_file(path) -> Trajectory:
    path = Path(path)
    m = _TRAJ_NAME.match(path.name)
    if not m:
        raise ValueError(f"{path}: file name must be <group>_<ped>.csv")
    return parse_trajectory(path.read_text(), int(m.group(2)), int(m.group(1)), str(path))


def common_time_base(trajs: list[Trajectory], dt: float) -> list[Trajectory]:
    """Resample every trajectory on one grid of step ``dt`` spanning the overlap window."""
    t0 = max(float(tr.t[0]) for tr in trajs)
    t1 = min(float(tr.t[-1]) for tr in trajs)
    if t1 - t0 < dt - 1e-9:
        raise ValueError(f"trajectories overlap for less than one time step ({t0} to {t1} s)")
    return [resample(tr, dt, t0, t1) for tr in trajs]


def read_trajectory_folder(path, dt_risk: float = 0.1) -> list[Trajectory]:
    folder = Path(path)
    if not folder.is_dir():
        raise FileNotFoundError(f"trajectory folder not found: {folder}")
    files = [p for p in folder.iterdir() if _TRAJ_NAME.match(p.name)]
    if not files:
        raise ValueError(f"no trajectories found in {folder}")
    trajs = sorted((read_trajectory_file(p) for p in files), key=lambda tr: (tr.group_id, tr.agent_id))
    seen: dict[int, int] = {}
    for tr in trajs:
        if tr.agent_id in seen:
            raise ValueError(
                f"pedestrian id {tr.agent_id} appears in groups {seen[tr.agent_id]} and {tr.group_id}"
            )
        seen[tr.agent_id] = tr.group_id
    return common_time_base(trajs, dt_risk)


def format_trajectory(tr: Trajectory) -> str:
    return "".join(
        f"{t!r};{x!r};{y!r};{h!r}\n" for t, x, y, h in zip(tr.t.tolist(), tr.x.tolist(), tr.y.tolist(), tr.head.tolist())
    )


def write_trajectories(trajs: list[Trajectory], path) -> list[Path]:
    folder = Path(path)
    folder.mkdir(parents=True, exist_ok=True)
    written = []
    for tr in sorted(trajs, key=lambda tr: (tr.group_id, tr.agent_id)):
        out = folder / f"{tr.group_id}_{tr.agent_id}.csv"
        out.write_text(format_trajectory(tr))
        written.append(out)
    return written


# --- reports -----------------------------------------------------------------


def _fixed(v: float, digits: int) -> str:
    s = f"{v:.{digits}f}"
    return s[1:] if s.startswith("-") and float(s) == 0 else s


def report_suffix(cfg: RunConfig) -> str:
    suffix = (
        f"vx{_fixed(cfg.ambient_wind.x, 3)}_vy{_fixed(cfg.ambient_wind.y, 3)}_T0{_fixed(cfg.T0, 1)}"
        f"_{cfg.mode.value}_iso{int(cfg.isotropic_inhalation)}_grp{int(cfg.contagion_amid_groups)}"
    )
    default = RunConfig()
    if cfg.dt_risk != default.dt_risk:
        suffix += f"_dt{cfg.dt_risk:g}"
    if cfg.linearized:
        suffix += "_lin"
    return suffix


def format_parameters(cfg: RunConfig, extra: dict | None = None) -> str:
    lines = []
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        if isinstance(v, Vec2):
            v = f"({v.x!r},{v.y!r})"
        elif isinstance(v, ExhalationMode):
            v = v.value
        elif isinstance(v, float):
            v = repr(v)
        lines.append(f"{f.name}={v}")
    for k, v in (extra or {}).items():
        lines.append(f"{k}={v}")
    return "\n".join(lines) + "\n"


def write_report(report: RiskReport, cfg: RunConfig, out_folder, extra: dict | None = None) -> Path:
    """Write one run's report folder and return it."""
    bad = np.flatnonzero(~((report.clow >= 0) & (report.clow <= report.cbar)))
    if bad.size:
        i = bad[0]
        raise ValueError(f"agent {report.agent_ids[i]}: Clow {report.clow[i]!r} outside [0, Cbar={report.cbar[i]!r}]")
    suffix = report_suffix(cfg)
    folder = Path(out_folder) / suffix
    folder.mkdir(parents=True, exist_ok=True)
    extra = {"T_obs": repr(report.t_obs), "n_agents": len(report.agent_ids), **(extra or {})}
    (folder / "parameters.txt").write_text(format_parameters(cfg, extra))
    by_person = "".join(
        f"{int(a)} {lo!r} {hi!r}\n" for a, lo, hi in zip(report.agent_ids.tolist(), report.clow.tolist(), report.cbar.tolist())
    )
    (folder / f"Risks_by_person_output_{suffix}.dat").write_text(by_person)
    (folder / f"Risks_mean_output_{suffix}.dat").write_text(f"{report.mean_clow!r} {report.mean_cbar!r}\n")
    return folder


def read_report(folder) -> tuple[list[tuple[int, float, float]], tuple[float, float]]:
    """(per-agent (id, Clow, Cbar) rows, (mean_Clow, mean_Cbar)) from a report folder."""
    folder = Path(folder)
    by_person = next(folder.glob("Risks_by_person_output_*.dat"))
    mean = next(folder.glob("Risks_mean_output_*.dat"))
    rows = []
    for line in by_person.read_text().splitlines():
        a, lo, hi = line.split(" ")
        rows.append((int(a), float(lo), float(hi)))
    lo, hi = mean.read_text().split()
    return rows, (float(lo), float(hi))
