from .engine import RunResult, SimulationError, integrate, run, run_from_state, step
from .jam import JamReport, detect_jam
from .scenario import (
    ScenarioConfig,
    ZoneTooDense,
    corridor_walls,
    format_scenario_config,
    init_corridor,
    load_scenario_config,
    parse_scenario_config,
)

__all__ = [
    "JamReport",
    "RunResult",
    "ScenarioConfig",
    "SimulationError",
    "ZoneTooDense",
    "corridor_walls",
    "detect_jam",
    "format_scenario_config",
    "init_corridor",
    "integrate",
    "load_scenario_config",
    "parse_scenario_config",
    "run",
    "run_from_state",
    "step",
]
