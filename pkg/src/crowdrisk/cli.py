"""Command line entry point: ``crowdrisk <command> ...``."""

from __future__ import annotations

import argparse
import logging
import re
import sys
from pathlib import Path

from . import __version__
from .io import read_input, read_trajectory_folder, write_report, write_trajectories
from .maps import ExhalationMode, GridSpec, PuffParams, generate_library, load_library, write_library
from .models.params import ModelKind, ModelParams, WallMode
from .risk import RunConfig, assess
from .sim import ScenarioConfig, detect_jam, format_scenario_config, load_scenario_config, run
from .sweep import SweepConfig, jam_inducing, regenerate, run_sweep

log = logging.getLogger("crowdrisk")


def _seeds(text: str) -> list[int]:
    """'1-12' or '1,5,9' or a mix."""
    out = []
    for part in text.split(","):
        part = part.strip()
        m = re.fullmatch(r"(\d+)\s*-\s*(\d+)", part)
        if m:
            out.extend(range(int(m.group(1)), int(m.group(2)) + 1))
        elif part:
            try:
                out.append(int(part))
            except ValueError:
                raise argparse.ArgumentTypeError(f"bad seed {part!r}") from None
    if not out:
        raise argparse.ArgumentTypeError("empty seed list")
    return out


def _pair(text: str) -> tuple[float, float]:
    parts = text.strip().strip("()").split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected vx,vy got {text!r}")
    return float(parts[0]), float(parts[1])


def _scenario_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("scenario")
    g.add_argument("--config", type=Path, help="scenario key=value file (flags below override it)")
    g.add_argument("--model", type=ModelKind.parse, help="SocialForces, RVO, ORCA, PowerLaw or Moussaid")
    g.add_argument("--seed", type=int)
    g.add_argument("--duration", type=float, help="simulated seconds")
    g.add_argument("--dt", type=float, help="integration step (s)")
    g.add_argument("--n-per-side", type=int)
    g.add_argument("--wall-mode", type=WallMode.parse)
    g.add_argument("--jam-inducing", action="store_true", help="preset that makes the counter-flows jam")


def _scenario_from(args) -> tuple[ScenarioConfig, ModelParams]:
    if args.config is not None:
        scen, params = load_scenario_config(args.config)
    else:
        scen, params = ScenarioConfig(), ModelParams()
    overrides = {
        "model": getattr(args, "model", None),
        "seed": getattr(args, "seed", None),
        "duration": args.duration,
        "dt": args.dt,
        "n_per_side": args.n_per_side,
        "wall_mode": args.wall_mode,
    }
    scen = scen.with_(**{k: v for k, v in overrides.items() if v is not None})
    if args.jam_inducing:
        scen, params = jam_inducing(scen, params)
    return scen, params


def _risk_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("risk")
    g.add_argument("--T0", type=float, default=900.0, help="characteristic infection time (s)")
    g.add_argument("--wind", type=_pair, default=(0.0, 0.2), help="ambient wind vx,vy (m/s)")
    g.add_argument("--mode", type=ExhalationMode.parse, default=ExhalationMode.SPEAKING)
    g.add_argument("--isotropic", action="store_true", help="allow inhalation from behind")
    g.add_argument("--no-amid-groups", action="store_true", help="no contagion within a group")
    g.add_argument("--dt-risk", type=float, default=0.1)
    g.add_argument("--diagrams", type=Path, help="map library folder (default: in-memory surrogate)")


def _risk_from(args) -> RunConfig:
    return RunConfig(
        T0=args.T0, ambient_wind=args.wind, mode=args.mode, isotropic_inhalation=args.isotropic,
        contagion_amid_groups=not args.no_amid_groups, dt_risk=args.dt_risk,
    )


def cmd_generate_maps(args) -> int:
    grid = GridSpec.covering(dx=args.dx, dtau=args.dtau)
    modes = args.modes or list(ExhalationMode)
    lib = generate_library(modes, grid, PuffParams())
    written = write_library(lib, args.folder)
    load_library(args.folder, modes)  # completeness check
    print(f"wrote {len(written)} maps to {args.folder}")
    return 0


def cmd_simulate(args) -> int:
    scen, params = _scenario_from(args)
    res = run(scen, params)
    trajs = res.trajectories()
    out = Path(args.out)
    write_trajectories(trajs, out / "trajectories")
    jam = detect_jam(trajs, scen)
    (out / "jam_report.txt").write_text(jam.to_text())
    (out / "metadata.txt").write_text(format_scenario_config(scen, params))
    print(f"{scen.model.value} seed {scen.seed}: {len(trajs)} trajectories, "
          f"jammed={int(jam.jammed)} ({jam.total_seconds:.1f} s) -> {out}")
    return 0


def cmd_assess(args) -> int:
    spec = read_input(args.input)
    libs: dict = {}
    cache: dict = {}
    for cfg in spec.configs:
        if cfg.mode not in libs:
            libs[cfg.mode] = load_library(spec.diagrams_folder, [cfg.mode])
        if cfg.dt_risk not in cache:
            cache[cfg.dt_risk] = read_trajectory_folder(spec.trajectory_folder, cfg.dt_risk)
        report = assess(cache[cfg.dt_risk], libs[cfg.mode], cfg)
        folder = write_report(report, cfg, spec.output_folder, {
            "DiagramsFolder": spec.diagrams_folder, "TrajectoryFolder": spec.trajectory_folder,
        })
        print(f"mean Clow {report.mean_clow:.4g} Cbar {report.mean_cbar:.4g} -> {folder}")
    return 0


def cmd_sweep(args) -> int:
    if args.plot_only:
        regenerate(args.out)
        print(f"regenerated figure and statistics in {args.out}")
        return 0
    scen, params = _scenario_from(args)
    models = args.models or list(ModelKind)
    cfg = SweepConfig(
        models=models, seeds=args.seeds, scenario=scen, params=params, risk=_risk_from(args), out_dir=args.out,
        diagrams=args.diagrams, jam_inducing=args.jam_inducing, workers=args.workers, write_runs=not args.no_runs,
    )
    rows = run_sweep(cfg)
    failed = [r for r in rows if r["status"] != "ok"]
    print(f"{len(rows)} runs ({len(failed)} failed) -> {cfg.out_dir / 'summary.csv'}")
    return 0


def cmd_jam_report(args) -> int:
    trajs = read_trajectory_folder(args.folder, args.dt)
    report = detect_jam(trajs, x_mid=args.x_mid)
    sys.stdout.write(report.to_text())
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="crowdrisk", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate-maps", help="write the surrogate concentration-map library")
    g.add_argument("folder", type=Path)
    g.add_argument("--modes", type=ExhalationMode.parse, nargs="+")
    g.add_argument("--dx", type=float, default=0.1, help="grid spacing (m)")
    g.add_argument("--dtau", type=float, default=0.25, help="time spacing (s)")
    g.set_defaults(func=cmd_generate_maps)

    s = sub.add_parser("simulate", help="simulate the corridor and write trajectories")
    _scenario_args(s)
    s.add_argument("--out", type=Path, required=True)
    s.set_defaults(func=cmd_simulate)

    a = sub.add_parser("assess", help="assess risks as described by an input file")
    a.add_argument("input", type=Path)
    a.set_defaults(func=cmd_assess)

    w = sub.add_parser("sweep", help="five-model sensitivity sweep")
    _scenario_args(w)
    _risk_args(w)
    w.add_argument("--models", type=ModelKind.parse, nargs="+")
    w.add_argument("--seeds", type=_seeds, default=list(range(1, 13)), help="e.g. 1-12 or 1,4,7")
    w.add_argument("--out", type=Path, required=True)
    w.add_argument("--workers", type=int, default=1)
    w.add_argument("--no-runs", action="store_true", help="skip per-run output folders")
    w.add_argument("--plot-only", action="store_true", help="only regenerate figure and stats from summary.csv")
    w.set_defaults(func=cmd_sweep)

    j = sub.add_parser("jam-report", help="detect jams in a trajectory folder")
    j.add_argument("folder", type=Path)
    j.add_argument("--x-mid", type=float, default=5.0, help="corridor centre x (m)")
    j.add_argument("--dt", type=float, default=0.1, help="resampling step (s)")
    j.set_defaults(func=cmd_jam_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except Exception as exc:
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        print(f"crowdrisk: error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
