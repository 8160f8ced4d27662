"""Model-sensitivity sweep: simulate every (model, seed), assess the risk, summarise.

Outputs in ``out_dir``:

* ``summary.csv`` - one row per run, sorted by (model, seed);
* ``model_stats.csv`` - per-model mean and coefficient of variation of mean_Cbar;
* ``summary.svg`` - one column per model, one dot per seed;
* ``runs/<model>_s<seed>/`` - trajectories, jam report and risk report of each run.
"""

from __future__ import annotations

import csv
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .io import write_report, write_trajectories
from .maps import MapLibrary, generate_library, load_library
from .models.params import ModelKind, ModelParams
from .risk import RunConfig, assess
from .sim import ScenarioConfig, detect_jam, format_scenario_config, run

log = logging.getLogger(__name__)

# Moussaid agents restricted to a narrow heading search cannot sidestep and
# lock into a jam at the corridor centre
JAM_INDUCING_MODEL = ModelKind.MOUSSAID
JAM_INDUCING_PARAMS = {"mou_angular_range": math.radians(20.0)}

SUMMARY_FIELDS = [
    "model", "seed", "preset", "status", "mean_Cbar", "mean_Clow", "max_dose",
    "jammed", "jam_seconds", "peak_jammed", "mean_nn_spacing",
]
MODEL_ORDER = [m.value for m in ModelKind]


def jam_inducing(scenario: ScenarioConfig, params: ModelParams = ModelParams()):
    """The jam-inducing preset applied to a scenario and parameter set."""
    return scenario.with_(model=JAM_INDUCING_MODEL), params.with_(**JAM_INDUCING_PARAMS)


@dataclass
class SweepConfig:
    models: list[ModelKind]
    seeds: list[int]
    scenario: ScenarioConfig = ScenarioConfig()
    params: ModelParams = ModelParams()
    risk: RunConfig = RunConfig(ambient_wind=(0.0, 0.2))
    out_dir: Path = Path("sweep")
    diagrams: Path | None = None  # map library folder; in-memory surrogate when None
    jam_inducing: bool = False
    workers: int = 1
    write_runs: bool = True

    def __post_init__(self):
        self.models = [ModelKind(m) for m in self.models]
        self.seeds = [int(s) for s in self.seeds]
        self.out_dir = Path(self.out_dir)
        if not self.models:
            raise ValueError("sweep needs at least one model")
        if self.jam_inducing:
            self.models = [JAM_INDUCING_MODEL]
        if not self.seeds:
            raise ValueError("sweep needs at least one seed")


def mean_nn_spacing(positions: np.ndarray) -> float:
    """Mean over frames and agents of the distance to the nearest other agent; positions (T, n, 2)."""
    out = []
    for frame in positions:
        d = np.hypot(frame[:, None, 0] - frame[None, :, 0], frame[:, None, 1] - frame[None, :, 1])
        np.fill_diagonal(d, np.inf)
        out.append(d.min(axis=1).mean())
    return float(np.mean(out))


_LIB_CACHE: dict = {}


def _library(cfg: SweepConfig) -> MapLibrary:
    key = (str(cfg.diagrams), cfg.risk.mode)
    if key not in _LIB_CACHE:
        if cfg.diagrams is None:
            _LIB_CACHE[key] = generate_library([cfg.risk.mode])
        else:
            _LIB_CACHE[key] = load_library(cfg.diagrams, [cfg.risk.mode])
    return _LIB_CACHE[key]


def run_one(cfg: SweepConfig, model: ModelKind, seed: int) -> dict:
    scenario = cfg.scenario.with_(model=model, seed=seed)
    params = cfg.params
    preset = "default"
    if cfg.jam_inducing:
        scenario, params = jam_inducing(scenario, params)
        preset = "jam_inducing"
    row = {"model": scenario.model.value, "seed": seed, "preset": preset}
    t_start = time.perf_counter()
    try:
        res = run(scenario, params)
        trajs = res.trajectories(cfg.risk.dt_risk)
        jam = detect_jam(trajs, scenario)
        report = assess(trajs, _library(cfg), cfg.risk)
    except Exception as exc:  # a failed run is recorded, not fatal
        log.warning("%s seed %d failed: %s", model.value, seed, exc)
        row.update(status=f"failed: {exc}".replace("\n", " "))
        return row
    stride = max(1, int(round(scenario.dt_sample / scenario.dt)))
    row.update(
        status="ok",
        mean_Cbar=report.mean_cbar,
        mean_Clow=report.mean_clow,
        max_dose=float(report.doses.max()),
        jammed=int(jam.jammed),
        jam_seconds=jam.total_seconds,
        peak_jammed=jam.peak_jammed_count,
        mean_nn_spacing=mean_nn_spacing(res.positions[::stride]),
    )
    if cfg.write_runs:
        folder = cfg.out_dir / "runs" / f"{row['model']}_s{seed}"
        write_trajectories(trajs, folder / "trajectories")
        (folder / "jam_report.txt").write_text(jam.to_text())
        (folder / "metadata.txt").write_text(format_scenario_config(scenario, params))
        write_report(report, cfg.risk, folder / "risk")
    log.info("%s seed %d: Cbar %.2f jammed %s (%.1f s)", row["model"], seed, report.mean_cbar, jam.jammed,
             time.perf_counter() - t_start)
    return row


def _sort_key(row):
    m = row["model"]
    return (MODEL_ORDER.index(m) if m in MODEL_ORDER else len(MODEL_ORDER), m, int(row["seed"]), row["preset"])


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return "" if v is None else str(v)


def write_summary(rows: list[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, SUMMARY_FIELDS, lineterminator="\n")
        w.writeheader()
        for row in sorted(rows, key=_sort_key):
            w.writerow({k: _fmt(row.get(k)) for k in SUMMARY_FIELDS})


def read_summary(path) -> list[dict]:
    rows = []
    with open(path, newline="") as fh:
        for r in csv.DictReader(fh):
            row = {"model": r["model"], "seed": int(r["seed"]), "preset": r["preset"], "status": r["status"]}
            if r["status"] == "ok":
                for k in ("mean_Cbar", "mean_Clow", "max_dose", "jam_seconds", "mean_nn_spacing"):
                    row[k] = float(r[k])
                row["jammed"] = int(r["jammed"])
                row["peak_jammed"] = int(r["peak_jammed"])
            rows.append(row)
    return rows


def model_stats(rows: list[dict]) -> list[dict]:
    """Per-model ensemble statistics over successful runs (all runs and jam-free runs)."""
    out = []
    for model in sorted({r["model"] for r in rows}, key=lambda m: _sort_key({"model": m, "seed": 0, "preset": ""})):
        ok = [r for r in rows if r["model"] == model and r["status"] == "ok"]
        free = [r for r in ok if not r["jammed"]]

        def stats(rs):
            c = np.array([r["mean_Cbar"] for r in rs])
            if not len(c):
                return math.nan, math.nan
            return float(c.mean()), float(c.std() / c.mean()) if c.mean() > 0 else math.nan

        mean_all, cv_all = stats(ok)
        mean_free, cv_free = stats(free)
        out.append({
            "model": model,
            "n_runs": len([r for r in rows if r["model"] == model]),
            "n_ok": len(ok),
            "n_jammed": len(ok) - len(free),
            "mean_Cbar": mean_all,
            "cv_Cbar": cv_all,
            "jam_free_mean_Cbar": mean_free,
            "jam_free_cv_Cbar": cv_free,
            "mean_nn_spacing": float(np.mean([r["mean_nn_spacing"] for r in ok])) if ok else math.nan,
        })
    return out


def write_model_stats(stats: list[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, list(stats[0]), lineterminator="\n")
        w.writeheader()
        for s in stats:
            w.writerow({k: _fmt(v) for k, v in s.items()})


def plot_summary(rows: list[dict], path) -> None:
    """Scatter of mean_Cbar per run: one column per model, jammed runs highlighted."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    ok = sorted((r for r in rows if r["status"] == "ok"), key=_sort_key)
    models = []
    for r in ok:
        if r["model"] not in models:
            models.append(r["model"])
    with matplotlib.rc_context({"svg.hashsalt": "crowdrisk", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(7, 4))
        for k, model in enumerate(models):
            rs = [r for r in ok if r["model"] == model]
            n = len(rs)
            xs = k + (np.arange(n) - (n - 1) / 2) * (0.5 / max(n, 1))
            cb = np.array([r["mean_Cbar"] for r in rs])
            jam = np.array([bool(r["jammed"]) for r in rs])
            ax.scatter(xs[~jam], cb[~jam], s=18, color="tab:blue", label="no jam" if k == 0 else None)
            ax.scatter(xs[jam], cb[jam], s=22, marker="s", color="tab:red", label="jammed" if k == 0 else None)
        ref = [r["mean_Cbar"] for r in ok if r["model"] == ModelKind.SOCIAL_FORCES.value and not r["jammed"]]
        if ref:
            ax.axhline(float(np.mean(ref)), color="grey", lw=0.8, ls="--", label="jam-free SocialForces mean")
        ax.set_xticks(range(len(models)))
        ax.set_xticklabels(models)
        ax.set_xlim(-0.6, max(len(models) - 0.4, 0.6))
        ax.set_ylim(bottom=0)
        ax.set_ylabel("mean new cases per hour (Cbar)")
        if ok:
            ax.legend(loc="upper left", fontsize="small")
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)


def run_sweep(cfg: SweepConfig) -> list[dict]:
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    jobs = [(m, s) for m in cfg.models for s in sorted(set(cfg.seeds))]
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            rows = list(pool.map(run_one, [cfg] * len(jobs), *zip(*jobs)))
    else:
        rows = [run_one(cfg, m, s) for m, s in jobs]
    write_outputs(rows, cfg.out_dir)
    return rows


def write_outputs(rows: list[dict], out_dir) -> None:
    out_dir = Path(out_dir)
    write_summary(rows, out_dir / "summary.csv")
    # statistics and figure are derived from the file so they can be regenerated alone
    regenerate(out_dir)


def regenerate(out_dir) -> None:
    out_dir = Path(out_dir)
    rows = read_summary(out_dir / "summary.csv")
    stats = model_stats(rows)
    if stats:
        write_model_stats(stats, out_dir / "model_stats.csv")
    plot_summary(rows, out_dir / "summary.svg")
