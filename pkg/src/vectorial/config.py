"""Run configuration: scenario presets, ``key = value`` files and command-line overrides."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path

from .control import ControlWeights
from .model import (
    DEFAULT_INITIAL_STATE,
    ModelError,
    ModelParameters,
    SeasonalForcing,
    StateVector,
    get_scenario,
)

VARIANTS = ("constant", "seasonal", "controlled")
INTEGRATORS = ("dp45", "rk4")

PARAM_KEYS = tuple(f.name for f in dataclasses.fields(ModelParameters))
STATE_KEYS = ("S_h0", "I_h0", "R_h0", "S_m0", "I_m0")
FLOAT_KEYS = ("alpha", "period", "gamma_D", "gamma_S", "t_f", "rel_tol", "abs_tol", "grid_step", "control")
TEXT_KEYS = ("variant", "integrator")
KNOWN_KEYS = ("scenario",) + PARAM_KEYS + STATE_KEYS + FLOAT_KEYS + TEXT_KEYS


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


@dataclass(frozen=True)
class RunConfig:
    scenario: int = 2
    params: ModelParameters = field(default_factory=lambda: get_scenario(2).params)
    initial_state: StateVector = DEFAULT_INITIAL_STATE
    variant: str = "constant"
    alpha: float = 0.3
    period: float = 365.0
    t_f: float = 365.0
    integrator: str = "dp45"
    rel_tol: float = 1e-8
    abs_tol: float = 1e-8
    grid_step: float = 0.1
    control: float = 0.0
    gamma_D: float = 1.0
    gamma_S: float = 1.0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant: expected one of {', '.join(VARIANTS)}, got {self.variant!r}")
        if self.integrator not in INTEGRATORS:
            raise ConfigError(f"integrator: expected one of {', '.join(INTEGRATORS)}, got {self.integrator!r}")
        for name in ("t_f", "rel_tol", "abs_tol", "grid_step"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigError(f"{name}: must be finite and > 0, got {value!r}")
        if not 0.0 <= self.control <= 1.0:
            raise ConfigError(f"control: must lie in [0, 1], got {self.control!r}")
        if any(not math.isfinite(v) or v < 0 for v in self.initial_state):
            raise ConfigError(f"initial state: components must be finite and >= 0, got {tuple(self.initial_state)}")
        try:
            SeasonalForcing(self.alpha, self.period)
            ControlWeights(self.gamma_D, self.gamma_S)
        except ModelError as exc:
            raise ConfigError(str(exc)) from exc

    @property
    def forcing(self) -> SeasonalForcing:
        return SeasonalForcing(self.alpha, self.period)

    @property
    def weights(self) -> ControlWeights:
        return ControlWeights(self.gamma_D, self.gamma_S)


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment. Returns typed values."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = (part.strip() for part in line.partition("="))
        where = f"{source}:{lineno}"
        if not sep or not key:
            raise ConfigError(f"{where}: expected 'key = value', got {raw.strip()!r}")
        if key not in KNOWN_KEYS:
            raise ConfigError(f"{where}: unknown key {key!r}")
        if key in TEXT_KEYS:
            values[key] = value
            continue
        try:
            number = float(value)
        except ValueError:
            hint = " (evaluate fractions before writing them)" if "/" in value else ""
            raise ConfigError(f"{where}: {key} must be a decimal number, got {value!r}{hint}") from None
        if key == "scenario":
            if number != int(number):
                raise ConfigError(f"{where}: scenario must be 1, 2 or 3, got {value!r}")
            number = int(number)
        values[key] = number
    return values


def read_config_file(path) -> dict:
    return parse_config_text(Path(path).read_text(encoding="utf-8"), str(path))


def build_config(values: dict) -> RunConfig:
    """Layer ``values`` over the scenario preset (default scenario 2)."""
    unknown = set(values) - set(KNOWN_KEYS)
    if unknown:
        raise ConfigError(f"unknown key(s): {', '.join(sorted(unknown))}")
    scenario_id = values.get("scenario", 2)
    try:
        preset = get_scenario(scenario_id)
    except ModelError as exc:
        raise ConfigError(f"scenario: {exc}") from exc
    overrides = {k: values[k] for k in PARAM_KEYS if k in values}
    try:
        params = preset.params.replace(**overrides)
    except ModelError as exc:
        raise ConfigError(str(exc)) from exc
    y0 = StateVector(*(float(values.get(k, v)) for k, v in zip(STATE_KEYS, preset.initial_state)))
    rest = {k: values[k] for k in FLOAT_KEYS + TEXT_KEYS if k in values}
    try:
        return RunConfig(scenario=preset.id, params=params, initial_state=y0, **rest)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def with_overrides(config: RunConfig, **changes) -> RunConfig:
    try:
        return dataclasses.replace(config, **{k: v for k, v in changes.items() if v is not None})
    except ModelError as exc:
        raise ConfigError(str(exc)) from exc


__all__ = [
    "ConfigError",
    "RunConfig",
    "build_config",
    "parse_config_text",
    "read_config_file",
    "with_overrides",
]
