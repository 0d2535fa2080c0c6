"""TOML run configuration: parsing, defaults and validation."""
from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field

import tomli

SCENARIOS = ("landau", "two_stream", "bracket_check", "gnh_demo", "ec_stability",
             "controlled_stabilization", "convergence")

RESOLUTIONS = {"low": (32, 128), "ref": (64, 256), "high": (128, 512)}

GRID_DEFAULTS = {"config": "ES_1D1V", "L": 4 * math.pi, "Nx": 64, "Nv": 256,
                 "v_max": 6.0, "q": 1.0}

SCENARIO_GRID = {"two_stream": {"L": 10 * math.pi}}

PARAM_DEFAULTS = {
    "landau": {"dt": 0.05, "t_end": 30.0, "k_mode": 1, "amplitude": 1e-3, "sigma": 1.0,
               "fit_t_min": 0.0, "tolerance": 0.05, "gauss_limit": 1e-6,
               "equilibrium_t_end": 20.0, "equilibrium_tolerance": 1e-10},
    "two_stream": {"dt": 0.05, "t_end": 40.0, "k_mode": 1, "amplitude": 1e-6, "u0": 2.4,
                   "sigma": 1.0, "fit_window": [15.0, 35.0], "tolerance": 0.05,
                   "gauss_limit": 1e-6},
    "bracket_check": {"n_triples": 100},
    "gnh_demo": {"n_random": 50, "max_dim": 6, "angle_tolerance": 1e-8},
    "ec_stability": {"modes": [1, 2, 3, 4, 5, 6, 7, 8], "n_random": 20, "u0": 2.4,
                     "sigma_range": [0.8, 1.5], "random_modes": [1, 2, 3]},
    "controlled_stabilization": {"v_mark": 1.5, "width": 1.5, "gain": 2.0,
                                 "modes": [1, 2, 3], "u": 0.3, "amplitude": 0.1,
                                 "power_dt": 0.02, "power_steps": 5,
                                 "power_tolerance": 1e-6, "zero_control_t_end": 2.0},
    "convergence": {"dt": [0.04, 0.02, 0.01], "t_end": 0.4, "min_time_order": 3.5},
}

# parameters that must be strictly positive when present
_POSITIVE = {"dt", "t_end", "sigma", "tolerance", "gauss_limit", "equilibrium_t_end",
             "equilibrium_tolerance", "u0", "width", "gain", "power_dt", "power_tolerance",
             "zero_control_t_end", "angle_tolerance", "min_time_order"}
_POSITIVE_INT = {"k_mode", "n_triples", "n_random", "max_dim", "power_steps"}
_NONNEGATIVE = {"amplitude", "fit_t_min", "v_mark"}


class ConfigError(ValueError):
    """Invalid configuration; ``problems`` lists every violation found."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


@dataclass
class RunConfig:
    scenario: str
    grid: dict
    params: dict
    seed: int = 0
    output: str = ""
    resolution: str = ""
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"scenario": self.scenario, "seed": self.seed, "output": self.output,
                "resolution": self.resolution, "grid": dict(self.grid),
                "params": copy.deepcopy(self.params)}


def _is_number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def _check_params(name: str, params: dict, problems: list):
    defaults = PARAM_DEFAULTS[name]
    for key, value in params.items():
        ref = defaults[key]
        where = f"params.{key}"
        if isinstance(ref, list):
            if not isinstance(value, list) or not all(_is_number(x) for x in value):
                problems.append(f"{where} must be a list of numbers")
                continue
            if key in ("modes", "random_modes") and not all(
                    isinstance(x, int) and x >= 1 for x in value):
                problems.append(f"{where} must list positive integers")
            if key == "dt" and (len(value) < 2 or not all(x > 0 for x in value)):
                problems.append(f"{where} must list at least two positive steps")
            if key in ("fit_window", "sigma_range") and (
                    len(value) != 2 or not 0 <= value[0] < value[1]):
                problems.append(f"{where} must be [lo, hi] with 0 <= lo < hi")
            continue
        if not _is_number(value):
            problems.append(f"{where} must be a number")
            continue
        if key in _POSITIVE_INT:
            if not isinstance(value, int) or value < 1:
                problems.append(f"{where} must be a positive integer")
        elif key in _POSITIVE and not value > 0:
            problems.append(f"{where} must be positive (got {value})")
        elif key in _NONNEGATIVE and not value >= 0:
            problems.append(f"{where} must be non-negative (got {value})")


def _check_grid(grid: dict, problems: list):
    if grid["config"] not in ("ES_1D1V", "EM_1D2V"):
        problems.append("grid.config must be 'ES_1D1V' or 'EM_1D2V'")
    for key in ("L", "v_max"):
        if not _is_number(grid[key]) or not grid[key] > 0:
            problems.append(f"grid.{key} must be positive")
    for key, lo in (("Nx", 4), ("Nv", 5)):
        v = grid[key]
        if not isinstance(v, int) or isinstance(v, bool) or v < lo:
            problems.append(f"grid.{key} must be an integer >= {lo}")
    if not _is_number(grid["q"]) or grid["q"] == 0:
        problems.append("grid.q must be a non-zero number")


def parse_config(text: str, scenario=None, seed=None, resolution=None, output=None) -> RunConfig:
    """Parse TOML text into a validated :class:`RunConfig` with defaults filled.

    Command-line values (``scenario``, ``seed``, ``resolution``, ``output``)
    take precedence over the file.  Raises :class:`ConfigError` listing
    every problem; TOML syntax errors carry line and column.
    """
    try:
        raw = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError([f"TOML parse error: {exc}"]) from None

    problems = []
    unknown = sorted(set(raw) - {"scenario", "seed", "output", "grid", "params"})
    problems += [f"unknown key '{k}'" for k in unknown]

    name = raw.get("scenario", scenario)
    if scenario is not None and name != scenario:
        problems.append(f"scenario '{name}' in config does not match command '{scenario}'")
    if name not in SCENARIOS:
        problems.append(f"scenario must be one of {', '.join(SCENARIOS)} (got {name!r})")
        raise ConfigError(problems)

    grid_in = raw.get("grid", {})
    params_in = raw.get("params", {})
    bad_tables = [f"'{label}' must be a table" for label, table in
                  (("grid", grid_in), ("params", params_in)) if not isinstance(table, dict)]
    if bad_tables:
        raise ConfigError(problems + bad_tables)
    problems += [f"unknown key 'grid.{k}'" for k in sorted(set(grid_in) - set(GRID_DEFAULTS))]
    problems += [f"unknown key 'params.{k}'" for k in sorted(set(params_in) - set(PARAM_DEFAULTS[name]))]

    grid = dict(GRID_DEFAULTS, **SCENARIO_GRID.get(name, {}))
    grid.update({k: v for k, v in grid_in.items() if k in grid})
    if resolution is not None:
        if resolution not in RESOLUTIONS:
            problems.append(f"resolution must be one of {', '.join(RESOLUTIONS)}")
        else:
            grid["Nx"], grid["Nv"] = RESOLUTIONS[resolution]
    params = copy.deepcopy(PARAM_DEFAULTS[name])
    known = {k: v for k, v in params_in.items() if k in params}
    params.update(known)

    seed = raw.get("seed", 0) if seed is None else seed
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        problems.append("seed must be a non-negative integer")
    out = raw.get("output", "") if output is None else output
    if not isinstance(out, str):
        problems.append("output must be a string path")

    _check_grid(grid, problems)
    _check_params(name, known, problems)
    if name == "landau" or name == "two_stream":
        if _is_number(params["t_end"]) and _is_number(params["dt"]) and params["dt"] > params["t_end"]:
            problems.append("params.dt must not exceed params.t_end")
    if problems:
        raise ConfigError(problems)
    for key in ("L", "v_max", "q"):
        grid[key] = float(grid[key])
    return RunConfig(name, grid, params, seed, out, resolution or "")
