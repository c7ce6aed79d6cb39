"""Experiment configuration files.

Configs are JSON; keys may be nested objects or flat dotted paths
("system.users": 4).  Field names carry explicit units (power_watts,
noise_watts) and a dBm alternative is accepted for transmit power.  All
module preconditions are validated up front so a bad config never starts a
computation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from isacwave.model import SystemConfig, dbm_to_watts
from isacwave.simkit import canonical_method

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "parse_config"]


class ConfigError(ValueError):
    """Invalid or missing configuration fields; carries one message per field."""

    def __init__(self, problems: list[str]):
        self.problems = problems
        super().__init__("; ".join(problems))


@dataclass
class ExperimentConfig:
    system: SystemConfig
    target_azimuths_deg: list[float]
    beam_weight: float
    theta: float | None
    theta_grid: list[float] | None
    budget: float
    norm: str
    eps: float
    method: str
    rho: float | None
    rho_grid: list[float] | None
    alpha: float
    episodes: int
    master_seed: int
    output_dir: str
    fmt: str
    symbol_power: float = 1.0
    verify_tolerances: dict = field(default_factory=dict)

    def design_theta(self) -> float:
        if self.theta is not None:
            return self.theta
        raise ConfigError(["uncertainty.theta: required for the design command "
                           "(theta_grid only drives montecarlo)"])

    def montecarlo_thetas(self) -> list[float]:
        if self.theta_grid:
            return self.theta_grid
        if self.theta is not None:
            return [self.theta]
        raise ConfigError(["uncertainty.theta or uncertainty.theta_grid: one is "
                           "required for the montecarlo command"])


def _flatten(obj: dict, prefix: str = "") -> dict:
    flat: dict = {}
    for key, value in obj.items():
        path = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(_flatten(value, path + "."))
        else:
            flat[path] = value
    return flat


def _get_number(flat, key, problems, *, required=False, default=None,
                low=None, high=None, integer=False):
    if key not in flat:
        if required:
            problems.append(f"{key}: missing required field")
        return default
    value = flat.pop(key)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        problems.append(f"{key}: expected a number, got {value!r}")
        return default
    if integer and int(value) != value:
        problems.append(f"{key}: expected an integer, got {value!r}")
        return default
    if low is not None and value < low:
        problems.append(f"{key}: must be >= {low}, got {value}")
        return default
    if high is not None and value > high:
        problems.append(f"{key}: must be <= {high}, got {value}")
        return default
    return int(value) if integer else float(value)


def _get_grid(flat, key, problems):
    if key not in flat:
        return None
    value = flat.pop(key)
    if not isinstance(value, (list, tuple)) or not value \
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool)
                       for v in value):
        problems.append(f"{key}: expected a non-empty list of numbers, got {value!r}")
        return None
    return [float(v) for v in value]


def parse_config(raw: dict) -> ExperimentConfig:
    """Validate a parsed JSON object; raises ConfigError naming every bad field."""
    problems: list[str] = []
    flat = _flatten(raw)

    k = _get_number(flat, "system.users", problems, required=True, low=1, integer=True)
    n = _get_number(flat, "system.tx_antennas", problems, required=True, low=1, integer=True)
    frame = _get_number(flat, "system.frame_length", problems, required=True, low=1, integer=True)
    power = _get_number(flat, "system.power_watts", problems, low=0.0)
    power_dbm = _get_number(flat, "system.power_dbm", problems)
    if power is None and power_dbm is not None:
        power = dbm_to_watts(power_dbm)
    if power is None:
        problems.append("system.power_watts: missing required field "
                        "(or give system.power_dbm)")
    noise = _get_number(flat, "system.noise_watts", problems, required=True, low=0.0)

    azimuths = _get_grid(flat, "targets.azimuths_deg", problems) or [-45.0, 45.0]
    beam_weight = _get_number(flat, "targets.beam_weight", problems,
                              default=0.8, low=0.0)
    if beam_weight is not None and beam_weight >= 1.0:
        problems.append(f"targets.beam_weight: must be < 1, got {beam_weight}")

    theta = _get_number(flat, "uncertainty.theta", problems, low=0.0)
    theta_grid = _get_grid(flat, "uncertainty.theta_grid", problems)
    budget = _get_number(flat, "uncertainty.budget", problems,
                         default=1.0, low=0.0, high=1.0)
    norm = flat.pop("uncertainty.norm", "fro")
    if norm not in ("fro", "inf"):
        problems.append(f"uncertainty.norm: must be 'fro' or 'inf', got {norm!r}")
    eps = _get_number(flat, "uncertainty.epsilon", problems, default=0.05, low=0.0)

    method_raw = flat.pop("method.name", None)
    method = None
    if method_raw is None:
        problems.append("method.name: missing required field")
    else:
        try:
            method = canonical_method(str(method_raw))
        except ValueError as exc:
            problems.append(f"method.name: {exc}")
    rho = _get_number(flat, "method.rho", problems, low=0.0, high=1.0)
    rho_grid = _get_grid(flat, "method.rho_grid", problems)
    if rho_grid is not None and any(not 0.0 <= r <= 1.0 for r in rho_grid):
        problems.append("method.rho_grid: entries must lie in [0, 1]")
    alpha = _get_number(flat, "method.alpha", problems, default=1e4, low=0.0)

    episodes = _get_number(flat, "montecarlo.episodes", problems,
                           default=1000, low=1, integer=True)
    master_seed = _get_number(flat, "montecarlo.master_seed", problems,
                              default=0, integer=True)

    output_dir = str(flat.pop("io.output_dir", "out"))
    fmt = flat.pop("io.format", "csv")
    if fmt not in ("csv", "json"):
        problems.append(f"io.format: must be 'csv' or 'json', got {fmt!r}")
    symbol_power = _get_number(flat, "constellation.symbol_power", problems,
                               default=1.0, low=0.0)

    tolerances = {}
    for key in list(flat):
        if key.startswith("verify."):
            tol = _get_number(flat, key, problems, low=0.0)
            if tol is not None:
                tolerances[key.removeprefix("verify.")] = tol

    for leftover in sorted(flat):
        problems.append(f"{leftover}: unknown field")

    system = None
    if not problems:
        try:
            system = SystemConfig(K=k, N=n, L=frame, P_T=power, N0=noise)
        except ValueError as exc:
            problems.append(f"system: {exc}")
    if problems:
        raise ConfigError(problems)
    return ExperimentConfig(
        system=system,
        target_azimuths_deg=azimuths,
        beam_weight=beam_weight,
        theta=theta,
        theta_grid=theta_grid,
        budget=budget,
        norm=norm,
        eps=eps,
        method=method,
        rho=rho,
        rho_grid=rho_grid,
        alpha=alpha,
        episodes=episodes,
        master_seed=master_seed,
        output_dir=output_dir,
        fmt=fmt,
        symbol_power=symbol_power,
        verify_tolerances=tolerances,
    )


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError([f"config file {path}: {exc}"]) from exc
    except json.JSONDecodeError as exc:
        raise ConfigError([f"config file {path}: invalid JSON ({exc})"]) from exc
    if not isinstance(raw, dict):
        raise ConfigError([f"config file {path}: top level must be an object"])
    return parse_config(raw)
