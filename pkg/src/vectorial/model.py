"""Human-mosquito dengue transmission model.

Three variants share one state layout ``(S_h, I_h, R_h, S_m, I_m)``:

* constant populations (SIR humans coupled to SI mosquitoes),
* seasonally forced mosquito recruitment,
* insecticide control acting as extra mosquito mortality.

Every vector field takes ``(state, params, ..., t)`` and returns a length-5
``numpy`` array of time derivatives (per day). Rates are per day.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

__all__ = [
    "COMPARTMENTS",
    "DEFAULT_INITIAL_STATE",
    "SCENARIOS",
    "ModelError",
    "ModelParameters",
    "NegativeStateError",
    "ScenarioPreset",
    "SeasonalForcing",
    "StateVector",
    "check_nonnegative",
    "get_scenario",
    "rhs_constant",
    "rhs_controlled",
    "rhs_seasonal",
    "vector_field",
]

COMPARTMENTS = ("S_h", "I_h", "R_h", "S_m", "I_m")

# relative (to N_h) round-off allowance below zero before a state is rejected
NEGATIVE_TOLERANCE = 1e-9


class ModelError(ValueError):
    """Invalid parameters, states or controls."""


class NegativeStateError(ModelError):
    """A compartment went negative beyond round-off."""


@dataclass(frozen=True)
class ModelParameters:
    """Rates and population sizes of the transmission model.

    ``N_m`` is not stored; it is derived as ``kappa * N_h``.
    """

    N_h: float = 112000.0
    kappa: float = 3.0
    B: float = 1.0 / 3.0
    beta_mh: float = 0.99
    beta_hm: float = 0.95
    mu_h: float = 1.0 / (79.0 * 365.0)
    eta_h: float = 1.0 / 7.0
    mu_m: float = 0.03

    def __post_init__(self):
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if isinstance(value, bool) or not isinstance(value, (int, float, np.floating, np.integer)):
                raise ModelError(f"{f.name} must be a real number, got {value!r}")
            value = float(value)
            if not math.isfinite(value) or value <= 0.0:
                raise ModelError(f"{f.name} must be finite and > 0, got {value!r}")
            object.__setattr__(self, f.name, value)
        for name in ("beta_mh", "beta_hm"):
            if getattr(self, name) > 1.0:
                raise ModelError(f"{name} is a probability and must be <= 1, got {getattr(self, name)!r}")

    @property
    def N_m(self) -> float:
        return self.kappa * self.N_h

    def replace(self, **changes) -> "ModelParameters":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


class StateVector(NamedTuple):
    """Head counts of the five compartments at one instant."""

    S_h: float
    I_h: float
    R_h: float
    S_m: float
    I_m: float

    @classmethod
    def from_array(cls, y: Sequence[float]) -> "StateVector":
        y = np.asarray(y, dtype=float)
        if y.shape != (5,):
            raise ModelError(f"state must have 5 components, got shape {y.shape}")
        return cls(*(float(v) for v in y))

    def as_array(self) -> np.ndarray:
        return np.array(self, dtype=float)

    @property
    def humans(self) -> float:
        return self.S_h + self.I_h + self.R_h

    @property
    def mosquitoes(self) -> float:
        return self.S_m + self.I_m


DEFAULT_INITIAL_STATE = StateVector(111991.0, 9.0, 0.0, 335000.0, 1000.0)


@dataclass(frozen=True)
class SeasonalForcing:
    """Periodic modulation ``1 + alpha*cos(2*pi*t/period)`` of mosquito births.

    ``alpha = 0`` is accepted as the unforced limit.
    """

    alpha: float = 0.3
    period: float = 365.0

    def __post_init__(self):
        alpha, period = float(self.alpha), float(self.period)
        if not 0.0 <= alpha < 1.0:
            raise ModelError(f"alpha must lie in [0, 1), got {self.alpha!r}")
        if not math.isfinite(period) or period <= 0.0:
            raise ModelError(f"period must be finite and > 0, got {self.period!r}")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "period", period)

    def factor(self, t: float) -> float:
        return 1.0 + self.alpha * math.cos(2.0 * math.pi * t / self.period)

    def birth_rate(self, mu_m: float, t: float) -> float:
        return mu_m * self.factor(t)

    @property
    def minimum_time(self) -> float:
        """First time in ``[0, period)`` where the birth rate is smallest."""
        return 0.5 * self.period


@dataclass(frozen=True)
class ScenarioPreset:
    id: int
    label: str
    params: ModelParameters
    initial_state: StateVector = DEFAULT_INITIAL_STATE
    # published squared threshold quantity for this parameter column
    reported_r0_squared: float | None = None


_MU_H = 1.0 / (79.0 * 365.0)
_ETA_H = 1.0 / 7.0

SCENARIOS = {
    1: ScenarioPreset(
        1,
        "mean temperature 14 C",
        ModelParameters(112000.0, 3.0, 1.0 / 3.0, 0.12, 0.11, _MU_H, _ETA_H, 0.04),
        reported_r0_squared=0.7698,
    ),
    2: ScenarioPreset(
        2,
        "mean temperature 26 C",
        ModelParameters(112000.0, 3.0, 1.0 / 3.0, 0.99, 0.95, _MU_H, _ETA_H, 0.03),
        reported_r0_squared=73.1322,
    ),
    3: ScenarioPreset(
        3,
        "mild climate, mean temperature 18-24 C",
        ModelParameters(112000.0, 3.0, 1.0 / 3.0, 0.2, 0.2, _MU_H, _ETA_H, 1.0 / 15.0),
        reported_r0_squared=0.6221,
    ),
}


def get_scenario(scenario_id: int) -> ScenarioPreset:
    try:
        return SCENARIOS[int(scenario_id)]
    except (KeyError, ValueError, TypeError):
        raise ModelError(f"unknown scenario {scenario_id!r}; expected one of {sorted(SCENARIOS)}") from None


def _unpack(state) -> tuple[float, float, float, float, float]:
    y = np.asarray(state, dtype=float)
    if y.shape != (5,):
        raise ModelError(f"state must have 5 components, got shape {y.shape}")
    bad = ~np.isfinite(y)
    if bad.any():
        names = ", ".join(COMPARTMENTS[i] for i in np.flatnonzero(bad))
        raise ModelError(f"non-finite state component(s): {names}")
    return tuple(y.tolist())


def _field(state, p: ModelParameters, recruitment: float, u: float) -> np.ndarray:
    S_h, I_h, R_h, S_m, I_m = _unpack(state)
    N_h = p.N_h
    infect_h = p.B * p.beta_mh * I_m / N_h
    infect_m = p.B * p.beta_hm * I_h / N_h
    return np.array(
        [
            p.mu_h * N_h - (infect_h + p.mu_h) * S_h,
            infect_h * S_h - (p.eta_h + p.mu_h) * I_h,
            p.eta_h * I_h - p.mu_h * R_h,
            recruitment - (infect_m + p.mu_m + u) * S_m,
            infect_m * S_m - (p.mu_m + u) * I_m,
        ]
    )


def rhs_constant(state, params: ModelParameters, t: float = 0.0) -> np.ndarray:
    """Constant-population vector field; ``t`` is unused."""
    return _field(state, params, params.mu_m * params.N_m, 0.0)


def rhs_seasonal(state, params: ModelParameters, forcing: SeasonalForcing, t: float) -> np.ndarray:
    """Vector field with periodic mosquito recruitment proportional to the live mosquito count."""
    y = _unpack(state)
    recruitment = params.mu_m * forcing.factor(t) * (y[3] + y[4])
    return _field(y, params, recruitment, 0.0)


def rhs_controlled(state, params: ModelParameters, u: float, t: float = 0.0) -> np.ndarray:
    """Vector field with insecticide ``u`` in [0, 1] removing mosquitoes at per-capita rate ``u``.

    Recruitment stays at ``mu_m * N_m`` regardless of the live mosquito count.
    """
    u = float(u)
    if not 0.0 <= u <= 1.0:
        raise ModelError(f"control must lie in [0, 1], got {u!r}")
    return _field(state, params, params.mu_m * params.N_m, u)


def vector_field(
    variant: str,
    params: ModelParameters,
    forcing: SeasonalForcing | None = None,
    control: Callable[[float], float] | None = None,
) -> Callable[[float, np.ndarray], np.ndarray]:
    """Bind a model variant into an ``f(t, y)`` callable for the integrators."""
    if variant == "constant":
        return lambda t, y: rhs_constant(y, params, t)
    if variant == "seasonal":
        forcing = forcing if forcing is not None else SeasonalForcing()
        return lambda t, y: rhs_seasonal(y, params, forcing, t)
    if variant == "controlled":
        if control is None:
            raise ModelError("controlled variant needs a control function u(t)")
        return lambda t, y: rhs_controlled(y, params, control(t), t)
    raise ModelError(f"unknown variant {variant!r}; expected constant, seasonal or controlled")


def check_nonnegative(y: np.ndarray, N_h: float) -> np.ndarray:
    """Clamp round-off negatives to zero; raise when a component is clearly negative."""
    y = np.asarray(y, dtype=float)
    floor = -NEGATIVE_TOLERANCE * N_h
    if (y < floor).any():
        i = int(np.argmin(y))
        name = COMPARTMENTS[i] if y.shape == (5,) else str(i)
        raise NegativeStateError(f"{name} = {y[i]!r} is below the round-off floor {floor!r}")
    return np.where(y < 0.0, 0.0, y)
